#ifndef COLLABNET_H
#define COLLABNET_H

/* Generated by cbindgen. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every call.
 */
typedef enum CnStatus {
  CN_STATUS_OK = 0,
  CN_STATUS_NULL_POINTER = 1,
  CN_STATUS_INVALID_ARGUMENT = 2,
  CN_STATUS_UNKNOWN_COUNTRY = 3,
  CN_STATUS_TOO_SMALL = 4,
  CN_STATUS_NUMERIC_FAILURE = 5,
  CN_STATUS_BUFFER_TOO_SMALL = 6,
  CN_STATUS_PANIC = 7,
} CnStatus;

/**
 * Collects edges before a network is built.
 */
typedef struct CnBuilder CnBuilder;

/**
 * An immutable weighted undirected network.
 */
typedef struct CnNetwork CnNetwork;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call on the same thread.
 */
const char *cn_last_error_message(void);

const char *cn_version(void);

struct CnBuilder *cn_builder_new(void);

/**
 * # Safety
 * `b` must come from `cn_builder_new` and not have been built or freed.
 */
void cn_builder_free(struct CnBuilder *b);

/**
 * Adds an undirected edge. Weights must be positive; duplicates are
 * rejected when the network is built.
 *
 * # Safety
 * `b` must be a live builder; `a` and `c` NUL-terminated strings.
 */
enum CnStatus cn_builder_add_edge(struct CnBuilder *b, const char *a, const char *c, double weight);

/**
 * Consumes the builder, whatever the outcome, and on success stores a new
 * network in `*out`.
 *
 * # Safety
 * `b` must be a live builder; it is freed by this call.
 */
enum CnStatus cn_builder_build(struct CnBuilder *b, struct CnNetwork **out);

/**
 * # Safety
 * `n` must come from `cn_builder_build` and not have been freed.
 */
void cn_network_free(struct CnNetwork *n);

/**
 * # Safety
 * `n` must be a live network and `out` writable.
 */
enum CnStatus cn_network_node_count(const struct CnNetwork *n, size_t *out);

/**
 * # Safety
 * `n` must be a live network and `out` writable.
 */
enum CnStatus cn_network_edge_count(const struct CnNetwork *n, size_t *out);

/**
 * Copies the label of node `i` into `buf` with a trailing NUL. `needed`
 * receives the size required, including the NUL, even on BufferTooSmall.
 *
 * # Safety
 * `buf` must hold `len` bytes; `needed` may be null.
 */
enum CnStatus cn_network_node_label(const struct CnNetwork *n,
                                    size_t i,
                                    char *buf,
                                    size_t len,
                                    size_t *needed);

/**
 * # Safety
 * `label` must be a NUL-terminated string and `out` writable.
 */
enum CnStatus cn_network_index_of(const struct CnNetwork *n, const char *label, size_t *out);

/**
 * Betweenness per node. `weighted` uses inverse-weight distances;
 * `normalized` divides by `(n-1)(n-2)/2`.
 *
 * # Safety
 * `out` must hold `len` doubles.
 */
enum CnStatus cn_betweenness(const struct CnNetwork *n,
                             bool weighted,
                             bool normalized,
                             double *out,
                             size_t len);

/**
 * # Safety
 * `out` must be writable.
 */
enum CnStatus cn_betweenness_centralization(const struct CnNetwork *n, double *out);

/**
 * # Safety
 * `out` must hold `len` doubles.
 */
enum CnStatus cn_degree_centrality(const struct CnNetwork *n, double *out, size_t len);

/**
 * Principal eigenvector, L2-normalised. `eigenvalue` may be null.
 *
 * # Safety
 * `out` must hold `len` doubles.
 */
enum CnStatus cn_eigenvector_centrality(const struct CnNetwork *n,
                                        double tolerance,
                                        size_t max_iterations,
                                        double *out,
                                        size_t len,
                                        double *eigenvalue);

/**
 * Core number per node; `max_k` may be null.
 *
 * # Safety
 * `out` must hold `len` entries.
 */
enum CnStatus cn_core_numbers(const struct CnNetwork *n,
                              uint32_t *out,
                              size_t len,
                              uint32_t *max_k);

/**
 * Local clustering per node; `average` may be null.
 *
 * # Safety
 * `out` must hold `len` doubles.
 */
enum CnStatus cn_clustering(const struct CnNetwork *n, double *out, size_t len, double *average);

/**
 * # Safety
 * `out` must be writable.
 */
enum CnStatus cn_global_efficiency(const struct CnNetwork *n, double *out);

/**
 * Greedy modularity communities. `block` receives a community index per
 * node; `count` and `q` may be null.
 *
 * # Safety
 * `block` must hold `len` entries.
 */
enum CnStatus cn_communities(const struct CnNetwork *n,
                             bool weighted,
                             uint32_t *block,
                             size_t len,
                             size_t *count,
                             double *q);

/**
 * Modularity of a caller-supplied assignment (one block index per node).
 *
 * # Safety
 * `block` must hold `len` entries.
 */
enum CnStatus cn_modularity(const struct CnNetwork *n,
                            const uint32_t *block,
                            size_t len,
                            bool weighted,
                            double *out);

/**
 * Share of the source's shortest paths that pass through `via`.
 * `sigma_weighted` selects path-count weighting instead of any-path.
 *
 * # Safety
 * Strings must be NUL-terminated; `out` writable.
 */
enum CnStatus cn_bridging_fraction(const struct CnNetwork *n,
                                   const char *source,
                                   const char *via,
                                   bool sigma_weighted,
                                   double *out);

/**
 * Benjamini-Hochberg adjusted p-values, in input order.
 *
 * # Safety
 * `p` and `out` must hold `len` doubles.
 */
enum CnStatus cn_bh_fdr(const double *p, size_t len, double *out);

/**
 * Granger F test of `x` on `y` at one lag. Both series are annual, start at
 * `first_year` and hold `len` values; they are first-differenced when
 * `difference` is set. `f_stat` may be null.
 *
 * # Safety
 * `x` and `y` must hold `len` doubles; `p_value` writable.
 */
enum CnStatus cn_granger_f_test(const double *x,
                                const double *y,
                                size_t len,
                                int32_t first_year,
                                size_t lag,
                                bool difference,
                                double *f_stat,
                                double *p_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COLLABNET_H */
