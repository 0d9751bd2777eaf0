#ifndef GRUSHIN_H
#define GRUSHIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GrushinStatus {
  GRUSHIN_STATUS_OK = 0,
  GRUSHIN_STATUS_INVALID_ARGUMENT = 1,
  GRUSHIN_STATUS_DOMAIN = 2,
  GRUSHIN_STATUS_NUMERICAL = 3,
  GRUSHIN_STATUS_UNCLASSIFIED = 4,
  GRUSHIN_STATUS_IO = 5,
  GRUSHIN_STATUS_NULL_POINTER = 6,
  GRUSHIN_STATUS_PANIC = 7,
} GrushinStatus;

typedef enum GrushinQuantization {
  GRUSHIN_QUANTIZATION_INTRINSIC = 0,
  GRUSHIN_QUANTIZATION_EXTRINSIC = 1,
} GrushinQuantization;

typedef enum GrushinSide {
  GRUSHIN_SIDE_LEFT = 0,
  GRUSHIN_SIDE_RIGHT = 1,
} GrushinSide;

typedef enum GrushinEndpointKind {
  GRUSHIN_ENDPOINT_KIND_LIMIT_POINT = 0,
  GRUSHIN_ENDPOINT_KIND_LIMIT_CIRCLE = 1,
} GrushinEndpointKind;

/**
 * Opaque mode-`k` fiber operator.
 */
typedef struct GrushinFiber GrushinFiber;

/**
 * Opaque triangulated surface.
 */
typedef struct GrushinMesh GrushinMesh;

/**
 * Opaque model handle.
 */
typedef struct GrushinModelHandle GrushinModelHandle;

typedef struct GrushinCurvature {
  double gaussian;
  double mean;
  double effective_potential;
} GrushinCurvature;

typedef struct GrushinPhasePoint {
  double x;
  double y;
  double px;
  double py;
} GrushinPhasePoint;

typedef struct GrushinEndpointClass {
  /**
   * Endpoint position; `±INFINITY` for infinite ends.
   */
  double endpoint;
  enum GrushinEndpointKind kind;
  bool borderline;
} GrushinEndpointClass;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *grushin_version(void);

/**
 * Message for the last failed call on this thread, or NULL after a
 * success. The pointer stays valid until the next call on this thread.
 */
const char *grushin_last_error(void);

/**
 * Creates the α-Grushin model `dx² + |x|^{−2α}dy²`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum GrushinStatus grushin_model_alpha(double alpha, struct GrushinModelHandle **out);

/**
 * Creates the Grushin metric with the `n²`-winded bell embedding.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum GrushinStatus grushin_model_winded(uint32_t n, struct GrushinModelHandle **out);

/**
 * # Safety
 * `model` must be NULL or a handle from `grushin_model_*` not yet freed.
 */
void grushin_model_free(struct GrushinModelHandle *model);

/**
 * `K`, `H` and `−K + H²` at `x`.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum GrushinStatus grushin_curvature(const struct GrushinModelHandle *model,
                                     double x,
                                     struct GrushinCurvature *out);

/**
 * Point of the isometric surface of revolution, written to `out[0..3]`.
 *
 * # Safety
 * `model` must be a live handle and `out` must point to three doubles.
 */
enum GrushinStatus grushin_embed_point(const struct GrushinModelHandle *model,
                                       double x,
                                       double y,
                                       double *out);

/**
 * Tessellates `[x_min, x_max] × [0, span)` into an opaque mesh.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum GrushinStatus grushin_mesh_generate(const struct GrushinModelHandle *model,
                                         double x_min,
                                         double x_max,
                                         size_t nx,
                                         size_t ny,
                                         bool full_winding,
                                         struct GrushinMesh **out);

/**
 * # Safety
 * `mesh` must be a live mesh handle.
 */
size_t grushin_mesh_vertex_count(const struct GrushinMesh *mesh);

/**
 * # Safety
 * `mesh` must be a live mesh handle.
 */
size_t grushin_mesh_face_count(const struct GrushinMesh *mesh);

/**
 * Copies vertices as `xyz` triples into `out`, which holds `capacity` doubles.
 *
 * # Safety
 * `mesh` must be a live mesh handle and `out` must hold `capacity` doubles.
 */
enum GrushinStatus grushin_mesh_vertices(const struct GrushinMesh *mesh,
                                         double *out,
                                         size_t capacity);

/**
 * Copies zero-based triangle indices into `out`, which holds `capacity` entries.
 *
 * # Safety
 * `mesh` must be a live mesh handle and `out` must hold `capacity` entries.
 */
enum GrushinStatus grushin_mesh_faces(const struct GrushinMesh *mesh, size_t *out, size_t capacity);

/**
 * # Safety
 * `mesh` must be NULL or a mesh handle not yet freed.
 */
void grushin_mesh_free(struct GrushinMesh *mesh);

/**
 * State at time `t` of the geodesic flow after `steps` implicit-midpoint steps.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum GrushinStatus grushin_geodesic_endpoint(const struct GrushinModelHandle *model,
                                             struct GrushinPhasePoint start,
                                             double t,
                                             size_t steps,
                                             struct GrushinPhasePoint *out);

/**
 * First conjugate time in `(0, t_max]`; `*found` is false when there is none.
 *
 * # Safety
 * `model` must be a live handle; `out` and `found` writable.
 */
enum GrushinStatus grushin_conjugate_time(const struct GrushinModelHandle *model,
                                          struct GrushinPhasePoint start,
                                          double t_max,
                                          size_t steps,
                                          double *out,
                                          bool *found);

/**
 * Mode-`k` fiber of the intrinsic (`Δ − cK`) or extrinsic (`Δ − K + H²`)
 * Laplacian. `c` is ignored for the extrinsic quantization.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum GrushinStatus grushin_fiber_new(const struct GrushinModelHandle *model,
                                     enum GrushinQuantization quantization,
                                     double c,
                                     int64_t k,
                                     struct GrushinFiber **out);

/**
 * # Safety
 * `fiber` must be NULL or a fiber handle not yet freed.
 */
void grushin_fiber_free(struct GrushinFiber *fiber);

/**
 * Open interval on which the fiber acts; ends may be infinite.
 *
 * # Safety
 * `fiber` must be a live handle; `left` and `right` writable.
 */
enum GrushinStatus grushin_fiber_interval(const struct GrushinFiber *fiber,
                                          double *left,
                                          double *right);

/**
 * Potential `V_k(x)` of the fiber after the unitary map to `L²(dx)`.
 *
 * # Safety
 * `fiber` must be a live handle and `out` writable.
 */
enum GrushinStatus grushin_fiber_potential(const struct GrushinFiber *fiber, double x, double *out);

/**
 * Limit-point / limit-circle class of one fiber endpoint.
 *
 * # Safety
 * `fiber` must be a live handle and `out` writable.
 */
enum GrushinStatus grushin_fiber_classify(const struct GrushinFiber *fiber,
                                          enum GrushinSide side,
                                          struct GrushinEndpointClass *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRUSHIN_H */
