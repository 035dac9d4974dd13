#ifndef PATENT_KG_H
#define PATENT_KG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PkgStatus {
  PKG_STATUS_OK = 0,
  PKG_STATUS_NULL_POINTER = 1,
  PKG_STATUS_INVALID_UTF8 = 2,
  PKG_STATUS_INVALID_ARGUMENT = 3,
  PKG_STATUS_IO = 4,
  PKG_STATUS_PARSE = 5,
  PKG_STATUS_MODEL = 6,
  PKG_STATUS_PANIC = 7,
} PkgStatus;

/**
 * Extraction pipeline handle owning its parse and attention providers.
 */
typedef struct PkgExtractor PkgExtractor;

/**
 * Knowledge graph handle.
 */
typedef struct PkgGraph PkgGraph;

typedef struct PkgStats {
  size_t n_patents;
  size_t n_entities;
  size_t n_edges;
  size_t n_phrasal_verbs;
} PkgStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pkg_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *pkg_last_error(void);

/**
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void pkg_string_free(char *s);

struct PkgGraph *pkg_graph_new(void);

/**
 * # Safety
 * `graph` must come from this library and not have been freed.
 */
void pkg_graph_free(struct PkgGraph *graph);

/**
 * Loads a triple JSONL file into a new graph stored in `*out`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum PkgStatus pkg_graph_load(const char *path, struct PkgGraph **out);

/**
 * Writes the graph as triple JSONL plus its stats header.
 *
 * # Safety
 * `graph` must be a live handle; `path` a NUL-terminated string.
 */
enum PkgStatus pkg_graph_save(const struct PkgGraph *graph, const char *path);

/**
 * Adds triples given as JSONL text.
 *
 * # Safety
 * `graph` must be a live handle; `jsonl` a NUL-terminated string.
 */
enum PkgStatus pkg_graph_add_triples(struct PkgGraph *graph, const char *jsonl);

/**
 * # Safety
 * `graph` must be a live handle; `out` must be writable.
 */
enum PkgStatus pkg_graph_stats(const struct PkgGraph *graph, struct PkgStats *out);

/**
 * Triples within `depth` hops of `entity`, as JSONL in `*out`. Free the
 * result with [`pkg_string_free`].
 *
 * # Safety
 * `graph` must be a live handle; `entity` a NUL-terminated string; `out`
 * must be writable.
 */
enum PkgStatus pkg_graph_query(const struct PkgGraph *graph,
                               const char *entity,
                               size_t depth,
                               char **out);

/**
 * Entity recall of the graph against a benchmark text, or the bundled
 * mechanical term list when `benchmark` is NULL.
 *
 * # Safety
 * `graph` must be a live handle; `benchmark` NULL or a NUL-terminated
 * string; `out` must be writable.
 */
enum PkgStatus pkg_graph_recall(const struct PkgGraph *graph, const char *benchmark, double *out);

/**
 * Builds an extractor from a JSON run configuration (the same keys as the
 * command-line config file); NULL uses the defaults.
 *
 * # Safety
 * `config_json` must be NULL or a NUL-terminated string; `out` must be
 * writable.
 */
enum PkgStatus pkg_extractor_new(const char *config_json, struct PkgExtractor **out);

/**
 * # Safety
 * `extractor` must come from this library and not have been freed.
 */
void pkg_extractor_free(struct PkgExtractor *extractor);

/**
 * Extracts triples from one JSON patent record and adds them to `graph`.
 * `*n_added` (optional) receives the number of new triples.
 *
 * # Safety
 * `extractor` and `graph` must be live handles; `record_json` a
 * NUL-terminated string; `n_added` NULL or writable.
 */
enum PkgStatus pkg_extractor_extract(const struct PkgExtractor *extractor,
                                     const char *record_json,
                                     struct PkgGraph *graph,
                                     size_t *n_added);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PATENT_KG_H */
