#ifndef PCAG_H
#define PCAG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Result of every fallible call.
 */
typedef enum PcagStatus {
  PCAG_STATUS_OK = 0,
  PCAG_STATUS_NULL_POINTER = 1,
  PCAG_STATUS_INVALID_ARGUMENT = 2,
  PCAG_STATUS_DISCONNECTED = 3,
  PCAG_STATUS_NUMERICAL = 4,
  PCAG_STATUS_IO = 5,
  PCAG_STATUS_PANIC = 6,
} PcagStatus;

/*
 Which network operation to charge.
 */
typedef enum PcagOperation {
  /*
   Every reading routed to the sink.
   */
  PCAG_OPERATION_DEFAULT = 0,
  /*
   In-network aggregation of a `size`-element record.
   */
  PCAG_OPERATION_AGGREGATE = 1,
  /*
   Broadcast of `size` values from the sink.
   */
  PCAG_OPERATION_FEEDBACK = 2,
} PcagOperation;

/*
 Opaque sensor field.
 */
typedef struct PcagField PcagField;

/*
 Opaque routing tree.
 */
typedef struct PcagTree PcagTree;

typedef struct PcagTreeStats {
  size_t sensors;
  size_t depth;
  size_t max_children;
  /*
   Index of the node with the most children.
   */
  size_t argmax_children;
} PcagTreeStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread. Valid until the next
 failing call on the same thread; never null.
 */
const char *pcag_last_error(void);

/*
 Library version, a static string.
 */
const char *pcag_version(void);

/*
 The bundled 52-sensor Intel lab layout rooted at sensor 16.

 # Safety
 `out` must be a valid pointer to writable storage.
 */
enum PcagStatus pcag_field_intel(struct PcagField **out);

/*
 A field of `n` sensors with ids and coordinates in meters.

 # Safety
 `ids`, `x` and `y` must each point to `n` readable elements; `out` must be writable.
 */
enum PcagStatus pcag_field_new(const uint32_t *ids,
                               const double *x,
                               const double *y,
                               size_t n,
                               uint32_t root_id,
                               struct PcagField **out);

/*
 Number of sensors, 0 for a null handle.

 # Safety
 `field` must be null or a live handle.
 */
size_t pcag_field_len(const struct PcagField *field);

/*
 Sensor ids in index order.

 # Safety
 `field` must be a live handle and `ids` must hold `len` elements.
 */
enum PcagStatus pcag_field_ids(const struct PcagField *field, uint32_t *ids, size_t len);

/*
 # Safety
 `field` must be null or a handle not yet freed.
 */
void pcag_field_free(struct PcagField *field);

/*
 Shortest-hop routing tree over links of at most `radio_range` meters.
 Fails with `Disconnected` when some sensor cannot reach the root.

 # Safety
 `field` must be a live handle; `out` must be writable.
 */
enum PcagStatus pcag_tree_build(const struct PcagField *field,
                                double radio_range,
                                struct PcagTree **out);

/*
 Parent index of every node, `-1` for the root.

 # Safety
 `tree` must be a live handle and `parents` must hold `len` elements.
 */
enum PcagStatus pcag_tree_parents(const struct PcagTree *tree, int64_t *parents, size_t len);

/*
 # Safety
 `tree` must be a live handle; `stats` must be writable.
 */
enum PcagStatus pcag_tree_stats(const struct PcagTree *tree, struct PcagTreeStats *stats);

/*
 Per-node packets received and transmitted for one operation.
 `size` is the record or payload length and is ignored for `Default`.

 # Safety
 `tree` must be a live handle; `rx` and `tx` must each hold `len` elements.
 */
enum PcagStatus pcag_tree_loads(const struct PcagTree *tree,
                                enum PcagOperation op,
                                size_t size,
                                uint64_t *rx,
                                uint64_t *tx,
                                size_t len);

/*
 # Safety
 `tree` must be null or a handle not yet freed.
 */
void pcag_tree_free(struct PcagTree *tree);

/*
 Whether aggregating `q` components never loads a node more than the default scheme.
 */
bool pcag_tradeoff_holds(size_t q, size_t max_children, size_t sensors);

/*
 Leading eigenpairs of a symmetric `p x p` row-major matrix by power
 iteration with deflation. Writes up to `q` eigenvalues and eigenvectors
 (vector `k` at `vectors[k * p ..]`) and the number found to `found`,
 which is smaller than `q` when a non-positive eigenvalue ends the run.

 # Safety
 `cov` must hold `p * p` elements, `values` `q`, `vectors` `q * p`;
 `found` must be writable.
 */
enum PcagStatus pcag_compute_basis(const double *cov,
                                   size_t p,
                                   size_t q,
                                   double delta,
                                   size_t t_max,
                                   double *values,
                                   double *vectors,
                                   size_t *found);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PCAG_H */
