#ifndef UMLK_H
#define UMLK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum UmlkStatus {
  UMLK_STATUS_OK = 0,
  UMLK_STATUS_NULL_ARGUMENT = 1,
  UMLK_STATUS_INVALID_UTF8 = 2,
  UMLK_STATUS_PARSE_FAILED = 3,
  UMLK_STATUS_INVALID_EXERCISE = 4,
  UMLK_STATUS_INVALID_CONFIG = 5,
  UMLK_STATUS_INVALID_STATE = 6,
  UMLK_STATUS_GAME_RULE = 7,
  UMLK_STATUS_PANIC = 99,
} UmlkStatus;

/**
 * Course game parameters.
 */
typedef struct UmlkConfig UmlkConfig;

/**
 * A loaded, validated exercise.
 */
typedef struct UmlkExercise UmlkExercise;

/**
 * The result of grading one diagram.
 */
typedef struct UmlkReport UmlkReport;

/**
 * One student's game state.
 */
typedef struct UmlkStudent UmlkStudent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *umlk_last_error(void);

/**
 * Library version as a static string.
 */
const char *umlk_version(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, freed at most once.
 */
void umlk_string_free(char *s);

/**
 * Name similarity in [0, 1] after normalization.
 *
 * # Safety
 * `a` and `b` must be NUL-terminated strings; `out` must be writable.
 */
enum UmlkStatus umlk_similarity(const char *a, const char *b, double *out_value);

/**
 * Loads and validates a solution file.
 *
 * # Safety
 * `solution_text` must be a NUL-terminated string; `out_exercise` writable.
 */
enum UmlkStatus umlk_exercise_load(const char *solution_text, struct UmlkExercise **out_exercise);

/**
 * # Safety
 * `exercise` must be NULL or a live handle from [`umlk_exercise_load`].
 */
void umlk_exercise_free(struct UmlkExercise *exercise);

/**
 * Parses a diagram document and grades it against every solution.
 *
 * # Safety
 * `exercise` must be a live handle; `document_text` a NUL-terminated string;
 * `out_report` writable.
 */
enum UmlkStatus umlk_evaluate(const struct UmlkExercise *exercise,
                              const char *document_text,
                              struct UmlkReport **out_report);

/**
 * Overall completeness in [0, 1], or a negative value for a NULL handle.
 *
 * # Safety
 * `report` must be NULL or a live handle.
 */
double umlk_report_completeness(const struct UmlkReport *report);

/**
 * Number of syntactic plus semantic diagnostics (0 for NULL).
 *
 * # Safety
 * `report` must be NULL or a live handle.
 */
size_t umlk_report_diagnostic_count(const struct UmlkReport *report);

/**
 * Index of the solution the report was graded against (0 for NULL).
 *
 * # Safety
 * `report` must be NULL or a live handle.
 */
size_t umlk_report_solution_index(const struct UmlkReport *report);

/**
 * The full report as JSON. Free the result with [`umlk_string_free`].
 *
 * # Safety
 * `report` must be a live handle; `out_json` writable.
 */
enum UmlkStatus umlk_report_to_json(const struct UmlkReport *report, char **out_json);

/**
 * # Safety
 * `report` must be NULL or a live handle from [`umlk_evaluate`].
 */
void umlk_report_free(struct UmlkReport *report);

/**
 * The default course configuration.
 */
struct UmlkConfig *umlk_config_default(void);

/**
 * Reads and validates a course configuration from JSON.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `out_config` writable.
 */
enum UmlkStatus umlk_config_from_json(const char *config_json, struct UmlkConfig **out_config);

/**
 * # Safety
 * `config` must be NULL or a live handle.
 */
void umlk_config_free(struct UmlkConfig *config);

/**
 * A fresh student at level 1.
 *
 * # Safety
 * `config` must be a live handle; the strings NUL-terminated;
 * `out_student` writable.
 */
enum UmlkStatus umlk_student_new(const struct UmlkConfig *config,
                                 const char *student_id,
                                 const char *display_name,
                                 struct UmlkStudent **out_student);

/**
 * Restores a student from the JSON produced by [`umlk_student_to_json`].
 *
 * # Safety
 * `state_json` must be a NUL-terminated string; `out_student` writable.
 */
enum UmlkStatus umlk_student_from_json(const char *state_json, struct UmlkStudent **out_student);

/**
 * The student's state as JSON. Free the result with [`umlk_string_free`].
 *
 * # Safety
 * `student` must be a live handle; `out_json` writable.
 */
enum UmlkStatus umlk_student_to_json(const struct UmlkStudent *student, char **out_json);

/**
 * Total XP (0 for NULL).
 *
 * # Safety
 * `student` must be NULL or a live handle.
 */
uint64_t umlk_student_total_xp(const struct UmlkStudent *student);

/**
 * Current level (0 for NULL).
 *
 * # Safety
 * `student` must be NULL or a live handle.
 */
uint32_t umlk_student_level(const struct UmlkStudent *student);

/**
 * Mood index from -3 to 3 (0 for NULL).
 *
 * # Safety
 * `student` must be NULL or a live handle.
 */
int8_t umlk_student_mood(const struct UmlkStudent *student);

/**
 * Applies a graded check to the student: XP bookkeeping, mood, and
 * completion when the report is perfect. On success `out_json` (if not
 * NULL) receives `{"recap": ..., "completion": ... | null}`. On failure the
 * student is unchanged.
 *
 * # Safety
 * `student`, `config` and `report` must be live handles; `out_json` NULL or
 * writable.
 */
enum UmlkStatus umlk_student_apply_check(struct UmlkStudent *student,
                                         const struct UmlkConfig *config,
                                         const struct UmlkReport *report,
                                         char **out_json);

/**
 * # Safety
 * `student` must be NULL or a live handle.
 */
void umlk_student_free(struct UmlkStudent *student);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UMLK_H */
