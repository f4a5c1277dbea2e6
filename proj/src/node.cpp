#include "noisegrid/node.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

namespace noisegrid {

bool TcpUplink::connect() {
  try {
    sock_ = TcpSocket::connect_to(host_, port_);
    return true;
  } catch (const std::runtime_error&) {
    return false;
  }
}

bool TcpUplink::send_line(const std::string& line) {
  return sock_.valid() && sock_.send_all(line + "\n");
}

RecvStatus TcpUplink::recv_line(std::string& out, int timeout_ms) {
  return sock_.recv_line(out, timeout_ms);
}

int backoff_delay_ms(int attempt, int base_ms, int cap_ms, RngStream& rng) {
  double delay = double(base_ms) * std::pow(2.0, std::max(0, attempt - 1));
  delay = std::min(delay, double(cap_ms));
  return int(delay / 2 + rng.uniform(0.0, delay / 2));
}

namespace {

// Sends one message and waits for its ack, reconnecting with backoff on any
// fault. Owns the node's single-in-flight discipline.
class ReliableSender {
 public:
  ReliableSender(Uplink& uplink, const SensorId& sensor, const std::string& key,
                 const NodeOptions& opts, uint64_t seed, NodeRunStats& stats)
      : uplink_(uplink),
        sensor_(sensor),
        opts_(opts),
        hello_(encode_message(HelloMsg{sensor, key}) + "\n"),
        backoff_rng_(seed, "backoff/" + sensor),
        stats_(stats) {}

  ~ReliableSender() { uplink_.close(); }

  void send(const WireMessage& msg, uint64_t expect_seq) {
    const std::string line = encode_message(msg) + "\n";
    int attempt = 0;
    std::string last_error = "not attempted";
    while (attempt < opts_.max_attempts) {
      if (attempt > 0) {
        ++stats_.retries;
        sleep_ms(backoff_delay_ms(attempt, opts_.backoff_base_ms,
                                  opts_.backoff_cap_ms, backoff_rng_));
      }
      ++attempt;
      if (!connected_) {
        if (!uplink_.connect() || !uplink_.send_line(hello_)) {
          uplink_.close();
          last_error = "connect failed";
          continue;
        }
        connected_ = true;
      }
      if (!uplink_.send_line(line)) {
        drop("send failed", last_error);
        continue;
      }
      std::string resp;
      RecvStatus rs = uplink_.recv_line(resp, opts_.ack_timeout_ms);
      if (rs != RecvStatus::Ok) {
        drop(rs == RecvStatus::Timeout ? "ack timeout" : "connection lost",
             last_error);
        continue;
      }
      WireMessage reply;
      try {
        reply = decode_message(resp);
      } catch (const InvalidInput&) {
        drop("unparseable reply", last_error);
        continue;
      }
      if (const AckMsg* ack = std::get_if<AckMsg>(&reply)) {
        if (ack->seq == expect_seq) return;
        drop("ack for wrong seq", last_error);
        continue;
      }
      if (const ErrMsg* err = std::get_if<ErrMsg>(&reply)) {
        // Server-reported errors are not transient: halt loudly rather than
        // drop frames.
        throw std::runtime_error("node " + sensor_ + ": server error " +
                                 err->code + ": " + err->detail);
      }
      drop("unexpected reply", last_error);
    }
    throw std::runtime_error("node " + sensor_ + ": uplink unreachable after " +
                             std::to_string(opts_.max_attempts) +
                             " attempts (" + last_error + ")");
  }

 private:
  void drop(const char* why, std::string& last_error) {
    last_error = why;
    uplink_.close();
    connected_ = false;
  }
  void sleep_ms(int ms) {
    if (opts_.sleep_fn) opts_.sleep_fn(ms);
    else std::this_thread::sleep_for(std::chrono::milliseconds(ms));
  }

  Uplink& uplink_;
  const SensorId& sensor_;
  const NodeOptions& opts_;
  const std::string hello_;
  RngStream backoff_rng_;
  NodeRunStats& stats_;
  bool connected_ = false;
};

std::vector<SourceClass> snippet_tags(const Timeline& timeline, Timestamp start,
                                      int64_t duration_s) {
  const int64_t end = start.s + duration_s;
  std::vector<SourceClass> tags;
  for (const EmittedEvent& ev : timeline) {
    if (ev.start.s < end && start.s < ev.end.s) tags.push_back(ev.cls);
    if (ev.start.s >= end) break;  // timeline sorted by start
  }
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  return tags;
}

std::string snippet_digest(const SensorId& sensor, Timestamp start) {
  uint64_t h = fnv1a64(sensor);
  h = fnv1a64(":", h);
  h = fnv1a64(std::to_string(start.s), h);
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace

NodeRunStats run_node(const ScenarioSpec& spec, const SensorSpec& sensor,
                      const Timeline& timeline, Uplink& uplink,
                      const std::string& key, const NodeOptions& opts) {
  if (opts.batch_seconds <= 0)
    throw InvalidInput("node: batch_seconds must be positive");

  NodeRunStats stats;
  ReliableSender sender(uplink, sensor.id, key, opts, spec.seed, stats);

  // Snippet starts: Poisson process over simulated time, own seq space.
  RngStream snip_rng(spec.seed, "snippets/" + sensor.id);
  const TimeRange range = spec.range();
  double next_snippet = range.end.s + 1.0;
  if (opts.snippet_mean_interval_s > 0)
    next_snippet = range.start.s + snip_rng.exponential(opts.snippet_mean_interval_s);
  uint64_t snippet_seq = 0;

  auto emit_snippets_up_to = [&](int64_t now_s) {
    while (next_snippet < double(now_s)) {
      SnippetRecord snip;
      snip.sensor = sensor.id;
      snip.seq = snippet_seq++;
      snip.start = Timestamp{int64_t(next_snippet)};
      snip.duration_s = 10;
      snip.payload_digest = snippet_digest(sensor.id, snip.start);
      snip.truth_tags = snippet_tags(timeline, snip.start, snip.duration_s);
      sender.send(snip, snip.seq);
      ++stats.snippets;
      next_snippet += snip_rng.exponential(opts.snippet_mean_interval_s);
    }
  };

  FrameSynthesizer synth(spec, sensor, timeline);
  BatchMsg batch;
  batch.sensor = sensor.id;
  batch.seq = 0;
  int64_t window_end = range.start.s + opts.batch_seconds;

  auto flush_batch = [&] {
    if (batch.frames.empty()) return;
    sender.send(batch, batch.seq);
    ++stats.batches;
    ++batch.seq;
    batch.frames.clear();
  };

  while (auto frame = synth.next()) {
    while (frame->t.s >= window_end) {
      flush_batch();
      emit_snippets_up_to(window_end);
      window_end += opts.batch_seconds;
    }
    batch.frames.push_back(*frame);
    ++stats.frames;
  }
  flush_batch();
  emit_snippets_up_to(range.end.s);
  return stats;
}

}  // namespace noisegrid
