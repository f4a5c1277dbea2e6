#pragma once

// Ingest service: authenticates node sessions, deduplicates batches and
// snippets by (sensor, seq), appends accepted messages to a durable NDJSON
// log, and applies frames to a LatticeStore. Replaying the log from empty
// reproduces the exact lattice state.

#include <atomic>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "noisegrid/lattice.hpp"
#include "noisegrid/net.hpp"
#include "noisegrid/wire.hpp"

namespace noisegrid {

struct IngestConfig {
  std::string key;       // shared secret expected in hello
  std::string log_path;  // empty → no durable log (tests, replay)
  uint64_t dedup_window = 1024;
};

// Tracks which sequence numbers have been applied for one (sensor, kind)
// stream: the lowest not-yet-applied seq plus a bounded set of out-of-order
// applied seqs ahead of it.
class SeqTracker {
 public:
  explicit SeqTracker(uint64_t window) : window_(window) {}
  bool seen(uint64_t seq) const {
    return seq < next_ || ahead_.count(seq) > 0;
  }
  bool in_window(uint64_t seq) const { return seq < next_ + window_; }
  void mark(uint64_t seq) {
    ahead_.insert(seq);
    while (!ahead_.empty() && *ahead_.begin() == next_) {
      ahead_.erase(ahead_.begin());
      ++next_;
    }
  }

 private:
  uint64_t next_ = 0;  // all seq < next_ applied
  uint64_t window_;
  std::set<uint64_t> ahead_;
};

// Serialized writer: every accepted message goes through apply() under one
// lock, in log-append → flush → lattice order, so an acked message is always
// durable and replay order matches apply order.
class Ingestor {
 public:
  Ingestor(LatticeStore& store, IngestConfig cfg);
  ~Ingestor();

  struct Outcome {
    enum Kind { Applied, Duplicate, Rejected } kind;
    std::string err_code;    // set when Rejected
    std::string err_detail;  // set when Rejected
  };

  Outcome apply(const BatchMsg& m, Timestamp recv);
  Outcome apply(const SnippetRecord& m, Timestamp recv);

  void flush();
  std::vector<SnippetRecord> snippets() const;

  uint64_t batches_applied() const { return batches_applied_; }
  uint64_t frames_applied() const { return frames_applied_; }
  uint64_t snippets_applied() const { return snippets_applied_; }
  uint64_t duplicates() const { return duplicates_; }
  uint64_t rejects() const { return rejects_; }

 private:
  struct SensorState {
    SeqTracker batches;
    SeqTracker snips;
    explicit SensorState(uint64_t w) : batches(w), snips(w) {}
  };
  SensorState& state_for(const SensorId& sensor);
  void log_append(const WireMessage& m, Timestamp recv);

  LatticeStore& store_;
  IngestConfig cfg_;
  mutable std::mutex mu_;
  std::map<SensorId, SensorState> sensors_;
  std::vector<SnippetRecord> snippets_;
  std::ofstream log_;
  std::atomic<uint64_t> batches_applied_{0};
  std::atomic<uint64_t> frames_applied_{0};
  std::atomic<uint64_t> snippets_applied_{0};
  std::atomic<uint64_t> duplicates_{0};
  std::atomic<uint64_t> rejects_{0};
};

// Validates a data message against protocol invariants. Returns an error
// code/detail pair with empty code on success.
std::pair<std::string, std::string> validate_batch(const BatchMsg& m);

struct ServerConfig {
  uint16_t port = 7477;  // 0 → ephemeral, see IngestServer::port()
  std::string key;
  std::string log_path;
  uint64_t dedup_window = 1024;
};

// TCP front end: one thread per connection, all sessions sharing one
// Ingestor. Sessions are isolated — a protocol error closes only the
// offending connection.
class IngestServer {
 public:
  IngestServer(LatticeStore& store, ServerConfig cfg);
  ~IngestServer();

  void start();          // binds and begins accepting; throws on bind failure
  void stop();           // stops accepting, closes sessions, joins, flushes
  uint16_t port() const; // actual port after start()

  Ingestor& ingestor() { return ingestor_; }
  uint64_t sessions_opened() const { return sessions_opened_; }
  uint64_t sessions_failed_auth() const { return auth_failures_; }

 private:
  struct Session {
    TcpSocket sock;
    std::thread thread;
    std::atomic<bool> done{false};
  };
  void accept_loop();
  void run_session(std::shared_ptr<Session> s);
  void reap_finished();  // joins sessions that flagged themselves done

  ServerConfig cfg_;
  Ingestor ingestor_;
  TcpListener listener_;
  std::thread acceptor_;
  std::mutex sessions_mu_;
  std::vector<std::shared_ptr<Session>> sessions_;
  std::atomic<bool> stopping_{false};
  bool started_ = false;
  std::atomic<uint64_t> sessions_opened_{0};
  std::atomic<uint64_t> auth_failures_{0};
};

struct ReplayStats {
  int64_t lines = 0;
  int64_t batches_applied = 0;
  int64_t snippets_applied = 0;
  int64_t duplicates = 0;
  int64_t skipped = 0;  // corrupt lines, lenient mode only
};

// Rebuilds lattice state from an ingest log. In strict mode a corrupt line
// throws InvalidInput naming "<path>:<line>"; in lenient mode corrupt lines
// are counted and skipped.
ReplayStats replay_log(const std::string& path, LatticeStore& store,
                       std::vector<SnippetRecord>* snippets_out,
                       bool lenient);

}  // namespace noisegrid
