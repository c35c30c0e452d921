#ifndef PLANFORGE_H
#define PLANFORGE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PfStatus {
  PF_STATUS_OK = 0,
  PF_STATUS_NULL_ARGUMENT = 1,
  PF_STATUS_INVALID_ARGUMENT = 2,
  PF_STATUS_IO = 3,
  PF_STATUS_PARSE = 4,
  PF_STATUS_VOTE_MISMATCH = 5,
  PF_STATUS_BUFFER_TOO_SMALL = 6,
  PF_STATUS_INTERNAL = 7,
  PF_STATUS_PANIC = 8,
} PfStatus;

/**
 * A floorplan in input coordinates.
 */
typedef struct PfFloorplan PfFloorplan;

/**
 * A point cloud with optional labels and ground-truth plan.
 */
typedef struct PfScene PfScene;

/**
 * Reconstruction settings; obtain defaults from
 * [`pf_reconstruct_options_default`].
 */
typedef struct PfReconstructOptions {
  uint32_t threads;
  double noise_sigma;
  double outlier_fraction;
  uint64_t noise_seed;
  double eps_room;
  double eps_wall;
} PfReconstructOptions;

typedef struct PfCounts {
  uint64_t tp;
  uint64_t fp;
  uint64_t fn_;
} PfCounts;

typedef struct PfMetrics {
  double corner_precision;
  double corner_recall;
  double edge_precision;
  double edge_recall;
  double room_precision;
  double room_recall;
  struct PfCounts corners;
  struct PfCounts edges;
  struct PfCounts rooms;
} PfMetrics;

typedef struct PfVoteLoss {
  double total;
  double room;
  double wall;
} PfVoteLoss;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *pf_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pf_version(void);

/**
 * Generates a synthetic scene with at most `max_rooms` rooms.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum PfStatus pf_scene_generate(uint64_t seed, uint32_t max_rooms, struct PfScene **out);

/**
 * Loads a scene JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` a valid pointer.
 */
enum PfStatus pf_scene_load(const char *path, struct PfScene **out);

/**
 * Writes a scene JSON file.
 *
 * # Safety
 * `scene` must be a live handle; `path` a NUL-terminated string.
 */
enum PfStatus pf_scene_save(const struct PfScene *scene, const char *path);

/**
 * Number of points, or 0 for a null handle.
 *
 * # Safety
 * `scene` must be null or a live handle.
 */
size_t pf_scene_point_count(const struct PfScene *scene);

/**
 * Copies the ground-truth plan into a new floorplan handle.
 *
 * # Safety
 * `scene` must be a live handle; `out` a valid pointer.
 */
enum PfStatus pf_scene_ground_truth(const struct PfScene *scene, struct PfFloorplan **out);

/**
 * # Safety
 * `scene` must be null or a handle not yet freed.
 */
void pf_scene_free(struct PfScene *scene);

struct PfReconstructOptions pf_reconstruct_options_default(void);

/**
 * Reconstructs a floorplan from a labeled scene with oracle votes. A plan
 * with zero rooms is a successful result. `options` may be null for
 * defaults.
 *
 * # Safety
 * `scene` must be a live handle, `options` null or valid, `out` valid.
 */
enum PfStatus pf_reconstruct(const struct PfScene *scene,
                             const struct PfReconstructOptions *options,
                             struct PfFloorplan **out);

/**
 * Loads a floorplan JSON file (or the ground truth of a scene file).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` a valid pointer.
 */
enum PfStatus pf_floorplan_load(const char *path, struct PfFloorplan **out);

/**
 * Number of rooms, or 0 for a null handle.
 *
 * # Safety
 * `plan` must be null or a live handle.
 */
size_t pf_floorplan_room_count(const struct PfFloorplan *plan);

/**
 * Id of the room at `index`.
 *
 * # Safety
 * `plan` must be a live handle; `out_id` a valid pointer.
 */
enum PfStatus pf_floorplan_room_id(const struct PfFloorplan *plan, size_t index, uint32_t *out_id);

/**
 * Copies the corners of room `index` as interleaved `x, y` pairs into
 * `xy`, which holds `capacity` corners (2 × capacity doubles). The corner
 * count is always stored in `out_len`; when it exceeds `capacity` nothing
 * is copied and `BufferTooSmall` is returned.
 *
 * # Safety
 * `plan` must be a live handle, `out_len` valid, and `xy` valid for
 * `2 * capacity` doubles (may be null when `capacity` is 0).
 */
enum PfStatus pf_floorplan_room_corners(const struct PfFloorplan *plan,
                                        size_t index,
                                        double *xy,
                                        size_t capacity,
                                        size_t *out_len);

/**
 * Floorplan as JSON; release with [`pf_string_free`]. Null on failure.
 *
 * # Safety
 * `plan` must be null or a live handle.
 */
char *pf_floorplan_to_json(const struct PfFloorplan *plan);

/**
 * # Safety
 * `plan` must be null or a handle not yet freed.
 */
void pf_floorplan_free(struct PfFloorplan *plan);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void pf_string_free(char *s);

/**
 * Scores `pred` against `gt` on a `grid`² raster (0 selects 256).
 *
 * # Safety
 * `gt` and `pred` must be live handles; `out` a valid pointer.
 */
enum PfStatus pf_evaluate(const struct PfFloorplan *gt,
                          const struct PfFloorplan *pred,
                          uint32_t grid,
                          struct PfMetrics *out);

/**
 * Vote loss for `m` seeds. Each array holds `9 * m` doubles: the `m`
 * room-0 offsets (xyz), then the `m` room-1 offsets, then the `m` wall
 * offsets.
 *
 * # Safety
 * `pred` and `gt` must be valid for `9 * m` doubles; `out` valid.
 */
enum PfStatus pf_vote_loss(const double *pred,
                           const double *gt,
                           size_t m,
                           double alpha,
                           struct PfVoteLoss *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLANFORGE_H */
