/* trifuse - linking points, mesh faces and image pixels of one scene.
 *
 * C interface of the shared library. All functions are thread-compatible:
 * distinct engines may be used from distinct threads, one engine must not be
 * shared without external locking. Strings returned by the library stay
 * owned by the engine and are valid until the next call on that engine.
 */

#ifndef TRIFUSE_H
#define TRIFUSE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as process exit codes of the bundled CLI. */
typedef enum trifuse_status {
  TRIFUSE_OK = 0,
  TRIFUSE_ERR_INPUT = 2,   /* unreadable/malformed inputs, bad arguments */
  TRIFUSE_ERR_INTERNAL = 3 /* invariant violation inside the engine */
} trifuse_status;

typedef struct trifuse_engine trifuse_engine;

const char* trifuse_version(void);

trifuse_engine* trifuse_engine_create(void);
void trifuse_engine_destroy(trifuse_engine* engine);

/* Message for the most recent failed call; empty string if none. */
const char* trifuse_last_error(const trifuse_engine* engine);
/* Run log of the most recent command (timings, counts, warnings). */
const char* trifuse_run_log(const trifuse_engine* engine);

/* -- configuration -------------------------------------------------------- */

trifuse_status trifuse_load_config(trifuse_engine* engine, const char* path);
trifuse_status trifuse_set_option(trifuse_engine* engine, const char* key, const char* value);
/* preset: "h3d" or "v3d" threshold schedules */
trifuse_status trifuse_apply_preset(trifuse_engine* engine, const char* name);
trifuse_status trifuse_set_threads(trifuse_engine* engine, int threads);

/* -- inputs ----------------------------------------------------------------- */

trifuse_status trifuse_load_mesh(trifuse_engine* engine, const char* manifest_path);
trifuse_status trifuse_load_cloud(trifuse_engine* engine, const char* ply_path);
trifuse_status trifuse_load_cameras(trifuse_engine* engine, const char* path);
trifuse_status trifuse_load_label_scheme(trifuse_engine* engine, const char* path);
trifuse_status trifuse_load_assoc(trifuse_engine* engine, const char* fasc_path);

uint64_t trifuse_point_count(const trifuse_engine* engine);
uint64_t trifuse_face_count(const trifuse_engine* engine);
uint64_t trifuse_tile_count(const trifuse_engine* engine);
uint64_t trifuse_camera_count(const trifuse_engine* engine);

/* -- pipeline commands ------------------------------------------------------- */

/* Point cloud <-> mesh association; writes the attributed cloud and the
 * binary association table (either path may be NULL to skip). */
trifuse_status trifuse_run_pcma(trifuse_engine* engine, const char* out_cloud_ply,
                                const char* out_assoc_fasc);

/* Image <-> mesh association; writes one .spxc per image plus the
 * visibility table into out_dir. */
trifuse_status trifuse_run_imgma(trifuse_engine* engine, const char* out_dir);

/* Point cloud <-> image association; mode is "implicit" or "explicit";
 * writes per-image link CSVs. */
trifuse_status trifuse_run_pcimga(trifuse_engine* engine, const char* mode, const char* out_dir);

typedef struct trifuse_transfer_desc {
  const char* direction; /* pc-to-mesh mesh-to-pc mesh-to-img img-to-mesh
                            pc-to-img img-to-pc */
  const char* kind;      /* "label" or "feature" */
  const char* mode;      /* "implicit"/"explicit" for pc<->img, else NULL */
  const char* src_attr;  /* comma separated source column names */
  const char* dst_attr;  /* comma separated target column names; NULL = src */
  const char* spxc_dir;  /* read pixel clouds from here instead of ray casting */
  const char* out_cloud; /* written for point targets */
  const char* out_mesh_dir; /* written for mesh targets */
  const char* out_spxc_dir; /* written for image targets */
  const char* ppm_dir;      /* optional label previews */
  const char* report_path;  /* optional transfer report */
  int explicit_use_aggregate; /* explicit pc-to-img: aggregate all points per
                                 pixel instead of the min-depth one */
} trifuse_transfer_desc;

trifuse_status trifuse_run_transfer(trifuse_engine* engine, const trifuse_transfer_desc* desc);

/* Forward/backward label consistency check plus association rates; the
 * report is written to report_path or appended to the run log when NULL. */
trifuse_status trifuse_run_check(trifuse_engine* engine, const char* report_path);

typedef struct trifuse_synth_desc {
  const char* template_name; /* plane cube rooftwoplane town */
  uint64_t seed;
  double extent;      /* m; <= 0 uses the default (10) */
  double density;     /* points per m^2; < 0 uses the default (50) */
  double noise_sigma; /* m along the face normal */
  double shift_x, shift_y, shift_z; /* rigid cloud shift, m */
  int subdiv;   /* plane template: grid cells per side */
  int ascii_ply; /* nonzero writes the cloud as ASCII PLY */
} trifuse_synth_desc;

/* Generates a synthetic scene on disk and loads it into the engine. */
trifuse_status trifuse_run_synth(trifuse_engine* engine, const trifuse_synth_desc* desc,
                                 const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* TRIFUSE_H */
