#ifndef HARDCORE_H
#define HARDCORE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HcStatus {
  HC_OK = 0,
  HC_NULL_POINTER = 1,
  HC_INVALID_UTF8 = 2,
  HC_DOMAIN = 3,
  HC_CONVERGENCE = 4,
  HC_PARSE = 5,
  HC_INPUT = 6,
  HC_RESOURCE = 7,
  HC_CAPACITY = 8,
  HC_CONSISTENCY = 9,
  HC_BUFFER_TOO_SMALL = 10,
  HC_PANIC = 11,
} HcStatus;

// Opaque graph handle.
typedef struct HcGraph HcGraph;

// Fixed points of the two-step tree recursion.
typedef struct HcFixedPoints {
  uint32_t d;
  double lambda;
  double lambda_c;
  double q_plus;
  double q_minus;
  double p_plus;
  double p_minus;
  double p_star;
  double residual;
} HcFixedPoints;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *hc_version(void);

// Message of the last failed call on this thread (empty after success).
// Returns the size needed including the NUL; copies when `len` suffices.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t hc_last_error(char *buf, size_t len);

// Solve the tree fixed points for degree `d` and fugacity `lambda`.
//
// # Safety
// `out` must be a valid pointer.
enum HcStatus hc_fixed_points(uint32_t d, double lambda, double tol, struct HcFixedPoints *out);

// The per-cut-edge ratio ((1-q⁺q⁻)²/((1-(q⁺)²)(1-(q⁻)²))).
//
// # Safety
// `out` must be a valid pointer.
enum HcStatus hc_cut_ratio(uint32_t d, double lambda, double *out);

// Parse a graph from its text format.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum HcStatus hc_graph_from_text(const char *text, struct HcGraph **out);

// Sample a gadget with `m` trees of depth `depth` per side, or the
// tree-less bipartite part when `tilde` is non-zero.
//
// # Safety
// `out` must be a valid pointer.
enum HcStatus hc_graph_sample_gadget(size_t n,
                                     size_t m,
                                     uint32_t depth,
                                     uint32_t d,
                                     uint64_t seed,
                                     int32_t tilde,
                                     struct HcGraph **out);

// Release a graph; null is ignored.
//
// # Safety
// `g` must come from this library and not be used afterwards.
void hc_graph_free(struct HcGraph *g);

// # Safety
// `g` must be a live handle or null (which gives 0).
size_t hc_graph_num_vertices(const struct HcGraph *g);

// # Safety
// `g` must be a live handle or null (which gives 0).
size_t hc_graph_num_edges(const struct HcGraph *g);

// Serialise to the text format.
//
// # Safety
// `g` must be a live handle; `buf` null or `len` writable bytes; `needed` null or valid.
enum HcStatus hc_graph_to_text(const struct HcGraph *g, char *buf, size_t len, size_t *needed);

// Exact partition function at rational fugacity `lambda` ("p/q", integer
// or decimal). The exact value goes to `buf` as "p/q" text, a float
// approximation to `approx`.
//
// # Safety
// Pointers as for [`hc_graph_to_text`]; `lambda` NUL-terminated; `approx` null or valid.
enum HcStatus hc_partition_function(const struct HcGraph *g,
                                    const char *lambda,
                                    char *buf,
                                    size_t len,
                                    size_t *needed,
                                    double *approx);

// Run heat-bath Glauber dynamics and report the fraction of sweeps in
// the + phase. `init`: 0 empty, 1 all W+ occupied, 2 all W- occupied.
//
// # Safety
// `g` must be a live handle and `plus_fraction` valid.
enum HcStatus hc_glauber_plus_fraction(const struct HcGraph *g,
                                       double lambda,
                                       size_t sweeps,
                                       int32_t init,
                                       uint64_t seed,
                                       double *plus_fraction);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HARDCORE_H */
