#pragma once

// Simulated sensor node: synthesizes frames from the soundscape, batches
// them per upload interval with gap-free sequence numbers, schedules random
// snippet records, and uploads everything over one connection with
// at-least-once retry (jittered exponential backoff, one in-flight message).

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "noisegrid/net.hpp"
#include "noisegrid/rng.hpp"
#include "noisegrid/soundscape.hpp"
#include "noisegrid/wire.hpp"

namespace noisegrid {

// The node's view of its connection to the ingest service. Virtual so tests
// can interpose fault schedules (dropped acks, broken connections).
class Uplink {
 public:
  virtual ~Uplink() = default;
  virtual bool connect() = 0;
  virtual bool send_line(const std::string& line) = 0;
  virtual RecvStatus recv_line(std::string& out, int timeout_ms) = 0;
  virtual void close() = 0;
};

class TcpUplink : public Uplink {
 public:
  TcpUplink(std::string host, uint16_t port)
      : host_(std::move(host)), port_(port) {}
  bool connect() override;
  bool send_line(const std::string& line) override;
  RecvStatus recv_line(std::string& out, int timeout_ms) override;
  void close() override { sock_.close(); }

 private:
  std::string host_;
  uint16_t port_;
  TcpSocket sock_;
};

struct NodeOptions {
  int64_t batch_seconds = 60;
  double snippet_mean_interval_s = 1800.0;  // Poisson mean gap; <= 0 disables
  int ack_timeout_ms = 5000;
  int backoff_base_ms = 1000;
  int backoff_cap_ms = 60000;
  int max_attempts = 10;  // consecutive failures before the node halts
  // Test hook; defaults to a real sleep.
  std::function<void(int ms)> sleep_fn;
};

struct NodeRunStats {
  int64_t frames = 0;
  int64_t batches = 0;
  int64_t snippets = 0;
  int64_t retries = 0;
};

// Jittered exponential backoff: half the exponential delay fixed, half
// uniform. attempt counts from 1.
int backoff_delay_ms(int attempt, int base_ms, int cap_ms, RngStream& rng);

// Runs one node over the full scenario range, synchronously. Throws
// std::runtime_error when the uplink stays down past the retry budget or the
// server reports an error; frames are never silently dropped.
NodeRunStats run_node(const ScenarioSpec& spec, const SensorSpec& sensor,
                      const Timeline& timeline, Uplink& uplink,
                      const std::string& key, const NodeOptions& opts = {});

}  // namespace noisegrid
