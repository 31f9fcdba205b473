#ifndef MATMAP_H
#define MATMAP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum MatmapStatus {
  MATMAP_STATUS_OK = 0,
  MATMAP_STATUS_NULL_POINTER = 1,
  MATMAP_STATUS_INVALID_UTF8 = 2,
  MATMAP_STATUS_PARSE_ERROR = 3,
  MATMAP_STATUS_DOMAIN_ERROR = 4,
  MATMAP_STATUS_INVALID_ROTATION = 5,
  MATMAP_STATUS_BUFFER_TOO_SMALL = 6,
  MATMAP_STATUS_NOT_FOUND = 7,
  MATMAP_STATUS_PANIC = 99,
} MatmapStatus;

typedef enum MatmapPulseLevel {
  MATMAP_PULSE_LEVEL_ZERO = 0,
  MATMAP_PULSE_LEVEL_HALF = 1,
  MATMAP_PULSE_LEVEL_ONE = 2,
} MatmapPulseLevel;

// Opaque network handle.
typedef struct MatmapNetwork MatmapNetwork;

// One step of one material stock.
typedef struct MatmapStockEvent {
  int64_t t_us;
  // 1-based material id.
  uint32_t material;
  double delta_kg;
  double after_kg;
} MatmapStockEvent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty if none. The
// pointer stays valid until the next failing call on this thread.
const char *matmap_last_error(void);

// Evaluates `rect(t / width)`.
//
// # Safety
// `out` must be null or point to writable memory for one level.
enum MatmapStatus matmap_rect(int64_t t_us, int64_t width_us, enum MatmapPulseLevel *out);

// Parses a scenario document and builds its network.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must point to writable
// storage for one handle pointer.
enum MatmapStatus matmap_network_from_json(const char *json, struct MatmapNetwork **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `net` must be null or a handle from [`matmap_network_from_json`] that has
// not been freed.
void matmap_network_free(struct MatmapNetwork *net);

// Unit count, class count and material count.
//
// # Safety
// `net` must be a live handle; each out pointer may be null.
enum MatmapStatus matmap_network_dims(const struct MatmapNetwork *net,
                                      size_t *units,
                                      size_t *classes,
                                      size_t *materials);

// Network stock at `t_us` into `out[0..materials]`.
//
// # Safety
// `net` must be a live handle; `out` must hold `len` doubles.
enum MatmapStatus matmap_network_stock(const struct MatmapNetwork *net,
                                       int64_t t_us,
                                       double *out,
                                       size_t len);

// Stock of one unit at `t_us`, as in the spatial map.
//
// # Safety
// `net` must be a live handle; `out` must hold `len` doubles.
enum MatmapStatus matmap_network_unit_stock(const struct MatmapNetwork *net,
                                            uint32_t unit_id,
                                            int64_t t_us,
                                            double *out,
                                            size_t len);

// Copies stock events into `out`. `count` always receives the total number
// of events; pass `cap = 0` to query it.
//
// # Safety
// `net` must be a live handle; `out` must hold `cap` events; `count` must
// be writable.
enum MatmapStatus matmap_network_events(const struct MatmapNetwork *net,
                                        struct MatmapStockEvent *out,
                                        size_t cap,
                                        size_t *count);

// Integral of each material stock over all time, kg*s.
//
// # Safety
// `net` must be a live handle; `out` must hold `len` doubles.
enum MatmapStatus matmap_network_mass_time_integral(const struct MatmapNetwork *net,
                                                    double *out,
                                                    size_t len);

// Samples the series on `t0, t0 + step, ... <= t1`. Writes sample times to
// `times` and row-major values (`rows x materials`) to `values`. `rows`
// always receives the number of grid points; pass `rows_cap = 0` to query.
//
// # Safety
// `net` must be a live handle; `times` must hold `rows_cap` entries and
// `values` `rows_cap * materials`; `rows` must be writable.
enum MatmapStatus matmap_network_sample(const struct MatmapNetwork *net,
                                        int64_t t0_us,
                                        int64_t t1_us,
                                        int64_t step_us,
                                        int64_t *times,
                                        double *values,
                                        size_t rows_cap,
                                        size_t *rows);

// Converts a local-frame target `[x1, y1, x2, y2]` at plane height `height`
// into two robot-frame points: `p = translation + rotation * [x, y, height]`.
// `rotation` is row-major 3x3 and must be a proper rotation.
//
// # Safety
// Array arguments must point to the stated number of doubles; `degenerate`
// may be null.
enum MatmapStatus matmap_pick_points_robot(const double *rotation,
                                           const double *translation,
                                           double height,
                                           const double *target,
                                           double *first,
                                           double *second,
                                           bool *degenerate);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MATMAP_H */
