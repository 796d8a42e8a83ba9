#ifndef PERCEPT_GUARD_H
#define PERCEPT_GUARD_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PgStatus {
  PG_STATUS_OK = 0,
  PG_STATUS_NULL_POINTER = 1,
  PG_STATUS_INVALID_UTF8 = 2,
  PG_STATUS_PARSE_ERROR = 3,
  PG_STATUS_INVALID_CONFIG = 4,
  PG_STATUS_CONTRACT_VIOLATION = 5,
  PG_STATUS_NO_EGO = 6,
  PG_STATUS_NO_VERDICT = 7,
  PG_STATUS_PANIC = 8,
} PgStatus;

typedef enum PgSource {
  PG_SOURCE_CAMERA = 0,
  PG_SOURCE_LIDAR = 1,
} PgSource;

typedef enum PgVerdict {
  PG_VERDICT_CONSISTENT = 0,
  PG_VERDICT_INCONSISTENT = 1,
  PG_VERDICT_NO_DATA = 2,
} PgVerdict;

typedef enum PgMode {
  PG_MODE_NOMINAL = 0,
  PG_MODE_DEGRADED = 1,
  PG_MODE_SAFE_STOP_REQUESTED = 2,
} PgMode;

/*
 Opaque monitor handle.
 */
typedef struct PgMonitor PgMonitor;

/*
 One detection, flattened for C callers. `class_label` must be a
 NUL-terminated UTF-8 string that outlives the call.
 */
typedef struct PgObject {
  const char *class_label;
  double width_m;
  double height_m;
  double x_m;
  double y_m;
  double confidence;
  uint64_t sensed_at_ms;
} PgObject;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Creates a monitor. `config_json` may be null for the defaults.

 # Safety
 `config_json` is null or a valid C string; `out` is a valid pointer.
 */
enum PgStatus pg_monitor_new(const char *config_json, struct PgMonitor **out);

/*
 Releases a monitor. Null is ignored.

 # Safety
 `monitor` is null or was returned by `pg_monitor_new` and not yet freed.
 */
void pg_monitor_free(struct PgMonitor *monitor);

/*
 Feeds one object-list frame given as JSON.

 # Safety
 `monitor` is a live handle and `frame_json` a valid C string.
 */
enum PgStatus pg_monitor_ingest_frame_json(struct PgMonitor *monitor, const char *frame_json);

/*
 Feeds one frame given as an array of `count` objects.

 # Safety
 `monitor` is a live handle; `objects` points to `count` valid entries
 (it may be null when `count` is 0).
 */
enum PgStatus pg_monitor_ingest_objects(struct PgMonitor *monitor,
                                        enum PgSource source,
                                        uint64_t frame_time_ms,
                                        const struct PgObject *objects,
                                        size_t count);

/*
 Replaces the current ego state, given as JSON.

 # Safety
 `monitor` is a live handle and `ego_json` a valid C string.
 */
enum PgStatus pg_monitor_set_ego_json(struct PgMonitor *monitor, const char *ego_json);

/*
 Evaluates at `now_ms`, advances the mode machine and writes the verdict.

 # Safety
 `monitor` is a live handle; `out_verdict` is null or a valid pointer.
 */
enum PgStatus pg_monitor_evaluate(struct PgMonitor *monitor,
                                  uint64_t now_ms,
                                  enum PgVerdict *out_verdict);

/*
 The full record of the last verdict as JSON. Free with `pg_string_free`.

 # Safety
 `monitor` is a live handle and `out` a valid pointer.
 */
enum PgStatus pg_monitor_last_verdict_json(const struct PgMonitor *monitor, char **out);

/*
 Current mode request.

 # Safety
 `monitor` is a live handle and `out` a valid pointer.
 */
enum PgStatus pg_monitor_mode(const struct PgMonitor *monitor, enum PgMode *out);

/*
 External override back to nominal; the only exit from a safe stop.

 # Safety
 `monitor` is a live handle.
 */
enum PgStatus pg_monitor_reset_mode(struct PgMonitor *monitor, uint64_t at_ms);

/*
 Computes both zone polygons for an ego state. `zones_json` may be null
 for the default zones. Free the result with `pg_string_free`.

 # Safety
 `ego_json` is a valid C string, `zones_json` null or a valid C string,
 `out` a valid pointer.
 */
enum PgStatus pg_compute_roi_json(const char *ego_json, const char *zones_json, char **out);

/*
 Releases a string returned by this library. Null is ignored.

 # Safety
 `s` is null or came from this library and was not yet freed.
 */
void pg_string_free(char *s);

/*
 Message for the last failed call on this thread, or null. Valid until
 the next call on the same thread; do not free.
 */
const char *pg_last_error_message(void);

/*
 Library version as a static string.
 */
const char *pg_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PERCEPT_GUARD_H */
