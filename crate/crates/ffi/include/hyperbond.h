#ifndef HYPERBOND_H
#define HYPERBOND_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HypStatus {
  HYP_STATUS_OK = 0,
  HYP_STATUS_NULL_ARGUMENT = 1,
  HYP_STATUS_INVALID_UTF8 = 2,
  HYP_STATUS_PARSE_ERROR = 3,
  HYP_STATUS_INVALID_STRUCTURE = 4,
  HYP_STATUS_CHECK_FAILED = 5,
  HYP_STATUS_OPERATION_FAILED = 6,
  HYP_STATUS_PANIC = 7,
} HypStatus;

/**
 * Opaque handle to a validated hyperstructure.
 */
typedef struct HypStructure HypStructure;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string.
 */
const char *hyp_version(void);

/**
 * Message of the last failed call on this thread, or null. Valid until
 * the next call on the same thread.
 */
const char *hyp_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void hyp_string_free(char *s);

/**
 * Parses and validates a structure document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum HypStatus hyp_structure_parse(const char *json, struct HypStructure **out);

/**
 * # Safety
 * `s` must be null or a handle from this library, freed once.
 */
void hyp_structure_free(struct HypStructure *s);

/**
 * Canonical JSON document of a structure.
 *
 * # Safety
 * `s` must be a live handle; `out` must be writable.
 */
enum HypStatus hyp_structure_to_json(const struct HypStructure *s, char **out);

/**
 * Number of bond levels.
 *
 * # Safety
 * `s` must be a live handle; `out` must be writable.
 */
enum HypStatus hyp_structure_order(const struct HypStructure *s, size_t *out);

/**
 * # Safety
 * `s` must be a live handle; `out` must be writable.
 */
enum HypStatus hyp_structure_object_count(const struct HypStructure *s, size_t *out);

/**
 * Bonds registered at `level`; zero above the top level.
 *
 * # Safety
 * `s` must be a live handle; `out` must be writable.
 */
enum HypStatus hyp_structure_bond_count(const struct HypStructure *s, size_t level, size_t *out);

/**
 * Validates a raw document and writes the JSON list of findings.
 * Returns `CheckFailed` when there are findings.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out_report` must be writable.
 */
enum HypStatus hyp_validate_document(const char *json, char **out_report);

/**
 * Checks the topology axioms of the site given by `s` and a topology
 * document; writes the JSON list of findings.
 *
 * # Safety
 * `s` must be a live handle, `topology_json` a NUL-terminated string and
 * `out_report` writable.
 */
enum HypStatus hyp_topology_check(const struct HypStructure *s,
                                  const char *topology_json,
                                  char **out_report);

/**
 * Transfers `s` along a relation document onto its universe.
 *
 * # Safety
 * `s` must be a live handle, `relation_json` a NUL-terminated string and
 * `out` writable.
 */
enum HypStatus hyp_transfer(const struct HypStructure *s,
                            const char *relation_json,
                            struct HypStructure **out);

/**
 * Levelwise Brunnian structure with `branching^order` objects.
 *
 * # Safety
 * `out` must be writable.
 */
enum HypStatus hyp_brunnian_generate(size_t branching, size_t order, struct HypStructure **out);

/**
 * Writes whether `s` is levelwise Brunnian.
 *
 * # Safety
 * `s` must be a live handle; `out` must be writable.
 */
enum HypStatus hyp_brunnian_check(const struct HypStructure *s, bool *out);

/**
 * Graphviz rendering of `s`.
 *
 * # Safety
 * `s` must be a live handle; `out` must be writable.
 */
enum HypStatus hyp_export_dot(const struct HypStructure *s, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPERBOND_H */
