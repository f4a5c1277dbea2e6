#ifndef NOISEGRID_C_NOISEGRID_H
#define NOISEGRID_C_NOISEGRID_H

/* C API for the noisegrid core, exported by libnoisegrid.so.
 *
 * Conventions:
 *   - Functions return ng_status; NG_OK is 0. On failure, ng_last_error()
 *     holds a message for the calling thread until the next failing call.
 *   - Out-parameters are written only on NG_OK.
 *   - Handles are opaque; every ng_*_free accepts NULL.
 *   - Strings returned through char** out-parameters are heap-allocated and
 *     must be released with ng_string_free().
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ng_status {
  NG_OK = 0,
  NG_ERR_RUNTIME = 1, /* I/O, network, internal failures */
  NG_ERR_INVALID = 2  /* malformed input: specs, configs, logs, arguments */
} ng_status;

const char* ng_last_error(void);
void ng_string_free(char* s);

/* ---- scenario specs ---------------------------------------------------- */

typedef struct ng_scenario ng_scenario;

ng_status ng_scenario_from_file(const char* path, ng_scenario** out);
ng_status ng_scenario_from_json(const char* json, ng_scenario** out);
ng_status ng_scenario_to_json(const ng_scenario* spec, char** json_out);
uint64_t ng_scenario_hash(const ng_scenario* spec);
void ng_scenario_free(ng_scenario* spec);

/* ---- configuration ------------------------------------------------------ */

/* Parses a config document (sections scenario/server/analysis, all optional),
 * materializes defaults, and returns the canonical form plus its stable hash.
 * `json` may be NULL for an all-defaults config. */
ng_status ng_config_canonical(const char* json, const char* base_dir,
                              char** canonical_out, uint64_t* hash_out);

/* ---- simulation --------------------------------------------------------- */

typedef struct ng_sim_stats {
  int64_t frames;
  int64_t batches;
  int64_t snippets;
  int64_t retries;
  int64_t events;     /* ground-truth timeline size */
  int64_t complaints; /* synthesized complaints */
  uint64_t lattice_digest; /* 0 when remote_host is set */
} ng_sim_stats;

/* Runs the full scenario: ground truth, complaint synthesis, one node per
 * sensor uploading to an in-process server (or to remote_host:remote_port
 * when remote_host is non-NULL). With out_dir set, writes scenario.json,
 * truth.csv, complaints.csv, digest.txt and (in-process) log.ndjson. */
ng_status ng_sim_run(const ng_scenario* spec, const char* out_dir,
                     const char* key, const char* remote_host,
                     uint16_t remote_port, ng_sim_stats* stats_out);

/* ---- standalone ingest server ------------------------------------------- */

typedef struct ng_server ng_server;

ng_status ng_server_start(uint16_t port, const char* key, const char* log_path,
                          ng_server** out);
uint16_t ng_server_port(const ng_server* server);
uint64_t ng_server_frames(const ng_server* server);
/* Digest of the server's current lattice state (stable across insertion
 * order; equal to the digest of a replay of the server's log). */
uint64_t ng_server_digest(const ng_server* server);
/* Graceful shutdown: stops accepting, drains sessions, flushes the log. */
ng_status ng_server_stop(ng_server* server);
void ng_server_free(ng_server* server);

/* ---- lattice store & queries -------------------------------------------- */

typedef struct ng_store ng_store;

ng_status ng_store_create(ng_store** out);
/* Replays an ingest log. In strict mode (lenient=0) a corrupt line fails
 * with NG_ERR_INVALID naming the line; with lenient=1 corrupt lines are
 * skipped and counted into *skipped_out (may be NULL). */
ng_status ng_store_replay(ng_store* store, const char* log_path, int lenient,
                          int64_t* skipped_out);
uint64_t ng_store_digest(const ng_store* store);
int64_t ng_store_total_frames(const ng_store* store);
/* CSV series query: columns span_start,value_mdb,count. `sensor` NULL means
 * aggregate across all sensors. `level` is one of raw|minute|5min|hour|day|
 * week|month; `stat` one of mean|energetic|min|max|count (energetic only for
 * aggregate queries). `comment` (optional) becomes a leading "# ..." line. */
ng_status ng_store_query_csv(const ng_store* store, const char* sensor,
                             int64_t from_s, int64_t to_s, const char* level,
                             const char* stat, const char* comment,
                             char** csv_out);
void ng_store_free(ng_store* store);

/* ---- study pipeline ------------------------------------------------------ */

/* Full pipeline: replays `log_path` (strict), loads complaints (NULL → none),
 * detects events over the scenario range and writes the report. The config
 * document must carry (or reference) the scenario the log was produced from.
 * With out_dir set, writes report.json plus the CSV tables. The report JSON
 * is returned through report_json_out when non-NULL. */
ng_status ng_study_run(const char* config_json, const char* base_dir,
                       const char* log_path, const char* complaints_path,
                       const char* out_dir, char** report_json_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* NOISEGRID_C_NOISEGRID_H */
