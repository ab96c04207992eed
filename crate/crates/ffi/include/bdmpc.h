#ifndef BDMPC_H
#define BDMPC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BdmpcOpKind {
  BDMPC_OP_KIND_INSERT = 0,
  BDMPC_OP_KIND_DELETE = 1,
} BdmpcOpKind;

typedef enum BdmpcStatus {
  BDMPC_STATUS_OK = 0,
  BDMPC_STATUS_NULL_POINTER = 1,
  BDMPC_STATUS_INVALID_ARGUMENT = 2,
  BDMPC_STATUS_INVALID_OP = 3,
  BDMPC_STATUS_BATCH_TOO_LARGE = 4,
  BDMPC_STATUS_CAPACITY_EXCEEDED = 5,
  BDMPC_STATUS_BUFFER_TOO_SMALL = 6,
  BDMPC_STATUS_VIOLATION = 7,
  BDMPC_STATUS_PANIC = 8,
} BdmpcStatus;

typedef struct BdmpcMatching BdmpcMatching;

typedef struct BdmpcMsf BdmpcMsf;

typedef struct BdmpcTwoEcc BdmpcTwoEcc;

typedef struct BdmpcEdge {
  uint32_t u;
  uint32_t v;
  double w;
} BdmpcEdge;

// One update; `w` is ignored for deletions.
typedef struct BdmpcOp {
  enum BdmpcOpKind kind;
  uint32_t u;
  uint32_t v;
  double w;
} BdmpcOp;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static description of `status`.
const char *bdmpc_status_message(enum BdmpcStatus status);

// Builds the minimum spanning forest of `n` vertices and `m` edges.
//
// # Safety
// `edges` points to `m` edges (or is null with `m == 0`); `out` is writable.
enum BdmpcStatus bdmpc_msf_new(size_t n,
                               const struct BdmpcEdge *edges,
                               size_t m,
                               double alpha,
                               uint64_t seed,
                               struct BdmpcMsf **out);

// Applies a batch of `k` updates.
//
// # Safety
// `h` comes from [`bdmpc_msf_new`]; `batch` points to `k` ops.
enum BdmpcStatus bdmpc_msf_apply(struct BdmpcMsf *h, const struct BdmpcOp *batch, size_t k);

// Copies the forest edges, ordered by edge id, into `out[..cap]`.
//
// # Safety
// `h` is a live handle; `out` has room for `cap` edges; `written` is
// writable.
enum BdmpcStatus bdmpc_msf_forest(const struct BdmpcMsf *h,
                                  struct BdmpcEdge *out,
                                  size_t cap,
                                  size_t *written);

// Simulated rounds so far, preprocessing included.
//
// # Safety
// `h` is a live handle or null (which yields 0).
uint64_t bdmpc_msf_rounds(const struct BdmpcMsf *h);

// # Safety
// `h` comes from [`bdmpc_msf_new`] and is not used afterwards.
void bdmpc_msf_free(struct BdmpcMsf *h);

// Builds the bridge and 2-edge-connected component structure; weights are
// ignored.
//
// # Safety
// As [`bdmpc_msf_new`].
enum BdmpcStatus bdmpc_twoecc_new(size_t n,
                                  const struct BdmpcEdge *edges,
                                  size_t m,
                                  double alpha,
                                  uint64_t seed,
                                  struct BdmpcTwoEcc **out);

// # Safety
// `h` comes from [`bdmpc_twoecc_new`]; `batch` points to `k` ops.
enum BdmpcStatus bdmpc_twoecc_apply(struct BdmpcTwoEcc *h, const struct BdmpcOp *batch, size_t k);

// Copies the current bridges into `out[..cap]`, with `w = 1`.
//
// # Safety
// As [`bdmpc_msf_forest`].
enum BdmpcStatus bdmpc_twoecc_bridges(const struct BdmpcTwoEcc *h,
                                      struct BdmpcEdge *out,
                                      size_t cap,
                                      size_t *written);

// Stores whether `u` and `v` are 2-edge-connected.
//
// # Safety
// `h` is a live handle; `out` is writable.
enum BdmpcStatus bdmpc_twoecc_connected(const struct BdmpcTwoEcc *h,
                                        uint32_t u,
                                        uint32_t v,
                                        bool *out);

// # Safety
// `h` comes from [`bdmpc_twoecc_new`] and is not used afterwards.
void bdmpc_twoecc_free(struct BdmpcTwoEcc *h);

// Builds a maximal matching; weights are ignored.
//
// # Safety
// As [`bdmpc_msf_new`].
enum BdmpcStatus bdmpc_matching_new(size_t n,
                                    const struct BdmpcEdge *edges,
                                    size_t m,
                                    double alpha,
                                    uint64_t seed,
                                    struct BdmpcMatching **out);

// # Safety
// `h` comes from [`bdmpc_matching_new`]; `batch` points to `k` ops.
enum BdmpcStatus bdmpc_matching_apply(struct BdmpcMatching *h,
                                      const struct BdmpcOp *batch,
                                      size_t k);

// Stores the mate of `v`, or -1 when `v` is unmatched.
//
// # Safety
// `h` is a live handle; `out` is writable.
enum BdmpcStatus bdmpc_matching_mate(const struct BdmpcMatching *h, uint32_t v, int64_t *out);

// Copies the matched edges into `out[..cap]`, with `w = 1`.
//
// # Safety
// As [`bdmpc_msf_forest`].
enum BdmpcStatus bdmpc_matching_edges(const struct BdmpcMatching *h,
                                      struct BdmpcEdge *out,
                                      size_t cap,
                                      size_t *written);

// # Safety
// `h` comes from [`bdmpc_matching_new`] and is not used afterwards.
void bdmpc_matching_free(struct BdmpcMatching *h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BDMPC_H */
