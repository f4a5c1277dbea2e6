#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <deque>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "noisegrid/ingest.hpp"
#include "noisegrid/node.hpp"

using namespace noisegrid;

namespace {

ScenarioSpec make_spec(int64_t duration_s) {
  ScenarioSpec spec;
  spec.seed = 42;
  spec.duration_s = duration_s;
  spec.origin_epoch = Timestamp{1600000000};
  spec.tz_offset_s = -5 * 3600;
  SensorSpec s;
  s.id = "n1";
  s.location = {0.0, 0.0};
  s.noise_sigma_db = 0.0;
  spec.sensors.push_back(s);
  for (auto& l : spec.ambient.hourly) l = Level{45000};
  return spec;
}

NodeOptions fast_opts() {
  NodeOptions opts;
  opts.snippet_mean_interval_s = 0.0;  // disabled unless a test re-enables it
  opts.sleep_fn = [](int) {};
  return opts;
}

// In-memory uplink with a scriptable fault schedule; the server half is a
// real Ingestor so dedup behaviour matches production.
class FakeUplink : public Uplink {
 public:
  explicit FakeUplink(LatticeStore& store, std::string key = "k")
      : ing_(store, IngestConfig{"", "", 1024}), key_(std::move(key)) {}

  int fail_connects = 0;            // next N connects fail outright
  std::set<int64_t> drop_acks;      // data ordinals applied but never acked
  std::set<int64_t> refuse_sends;   // data ordinals that kill the connection

  int connects = 0;
  int64_t data_messages = 0;
  std::vector<BatchMsg> applied_batches;
  Ingestor& ingestor() { return ing_; }

  bool connect() override {
    ++connects;
    if (fail_connects > 0) {
      --fail_connects;
      return false;
    }
    open_ = true;
    authed_ = false;
    queue_.clear();
    return true;
  }

  bool send_line(const std::string& line) override {
    if (!open_) return false;
    std::string body = line;
    if (!body.empty() && body.back() == '\n') body.pop_back();
    WireMessage msg = decode_message(body);
    if (const HelloMsg* h = std::get_if<HelloMsg>(&msg)) {
      if (h->key != key_) {
        queue_.push_back(encode_message(ErrMsg{kErrAuth, "bad key"}));
      } else {
        authed_ = true;
      }
      return true;
    }
    if (!authed_) return true;  // the queued AUTH error is the reply
    ++data_messages;
    if (refuse_sends.count(data_messages)) {
      open_ = false;
      return false;
    }
    uint64_t seq = 0;
    Ingestor::Outcome out{};
    if (const BatchMsg* b = std::get_if<BatchMsg>(&msg)) {
      seq = b->seq;
      out = ing_.apply(*b, Timestamp{0});
      if (out.kind == Ingestor::Outcome::Applied) applied_batches.push_back(*b);
    } else {
      const SnippetRecord& sn = std::get<SnippetRecord>(msg);
      seq = sn.seq;
      out = ing_.apply(sn, Timestamp{0});
    }
    if (out.kind == Ingestor::Outcome::Rejected) {
      queue_.push_back(encode_message(ErrMsg{out.err_code, out.err_detail}));
    } else if (!drop_acks.count(data_messages)) {
      queue_.push_back(encode_message(AckMsg{seq}));
    }
    return true;
  }

  RecvStatus recv_line(std::string& out, int) override {
    if (!queue_.empty()) {
      out = queue_.front();
      queue_.pop_front();
      return RecvStatus::Ok;
    }
    return open_ ? RecvStatus::Timeout : RecvStatus::Eof;
  }

  void close() override {
    open_ = false;
    queue_.clear();
  }

 private:
  Ingestor ing_;
  std::string key_;
  std::deque<std::string> queue_;
  bool open_ = false;
  bool authed_ = false;
};

}  // namespace

TEST_CASE("backoff delays are exponential with equal jitter") {
  RngStream rng(1, "backoff-test");
  for (int trial = 0; trial < 50; ++trial) {
    int d1 = backoff_delay_ms(1, 1000, 60000, rng);
    CHECK(d1 >= 500);
    CHECK(d1 <= 1000);
    int d2 = backoff_delay_ms(2, 1000, 60000, rng);
    CHECK(d2 >= 1000);
    CHECK(d2 <= 2000);
    int d10 = backoff_delay_ms(10, 1000, 60000, rng);  // 2^9 s caps at 60 s
    CHECK(d10 >= 30000);
    CHECK(d10 <= 60000);
  }
  // The jitter half actually varies.
  std::set<int> seen;
  for (int i = 0; i < 20; ++i) seen.insert(backoff_delay_ms(3, 1000, 60000, rng));
  CHECK(seen.size() > 1);
}

TEST_CASE("a two-minute run uploads two gap-free batches") {
  ScenarioSpec spec = make_spec(120);
  Timeline timeline;
  LatticeStore store;
  FakeUplink uplink(store);

  NodeRunStats stats = run_node(spec, spec.sensors[0], timeline, uplink, "k", fast_opts());
  CHECK(stats.frames == 120);
  CHECK(stats.batches == 2);
  CHECK(stats.snippets == 0);
  CHECK(stats.retries == 0);
  CHECK(store.total_frames() == 120);

  REQUIRE(uplink.applied_batches.size() == 2);
  for (size_t i = 0; i < uplink.applied_batches.size(); ++i) {
    const BatchMsg& b = uplink.applied_batches[i];
    CHECK(b.seq == i);
    CHECK(b.sensor == "n1");
    CHECK(b.frames.size() == 60);
    for (const SplFrame& f : b.frames) {
      CHECK(f.t.s >= spec.origin_epoch.s + int64_t(i) * 60);
      CHECK(f.t.s < spec.origin_epoch.s + int64_t(i + 1) * 60);
    }
  }
}

TEST_CASE("uploaded frames are exactly what the synthesizer produces") {
  ScenarioSpec spec = make_spec(200);
  spec.sensors[0].noise_sigma_db = 0.7;
  spec.sensors[0].calibration_offset = Level{1500};
  Timeline timeline{
      {SourceClass::Jackhammer, Timestamp{1600000030}, Timestamp{1600000090}, Level{95000},
       GeoPoint{3.0, 4.0}},
  };

  LatticeStore store;
  FakeUplink uplink(store);
  run_node(spec, spec.sensors[0], timeline, uplink, "k", fast_opts());

  std::vector<SplFrame> expect;
  FrameSynthesizer synth(spec, spec.sensors[0], timeline);
  while (auto f = synth.next()) expect.push_back(*f);
  CHECK(store.raw_frames("n1") == expect);
}

TEST_CASE("calibration shows up in the stored levels") {
  ScenarioSpec quiet = make_spec(60);
  for (auto& l : quiet.ambient.hourly) l = Level{40000};
  quiet.sensors[0].calibration_offset = Level{-20000};  // drives readings to the floor
  LatticeStore store;
  FakeUplink uplink(store);
  run_node(quiet, quiet.sensors[0], {}, uplink, "k", fast_opts());
  for (const SplFrame& f : store.raw_frames("n1")) CHECK(f.level.mdb == 32000);

  ScenarioSpec loud = make_spec(60);
  loud.sensors[0].calibration_offset = Level{2000};
  LatticeStore store2;
  FakeUplink uplink2(store2);
  run_node(loud, loud.sensors[0], {}, uplink2, "k", fast_opts());
  for (const SplFrame& f : store2.raw_frames("n1")) CHECK(f.level.mdb == 47000);
}

TEST_CASE("lost acks and dead connections still deliver exactly once") {
  ScenarioSpec spec = make_spec(300);
  spec.sensors[0].noise_sigma_db = 0.5;
  NodeOptions opts = fast_opts();
  opts.snippet_mean_interval_s = 60.0;

  LatticeStore clean_store;
  FakeUplink clean(clean_store);
  NodeRunStats clean_stats = run_node(spec, spec.sensors[0], {}, clean, "k", opts);
  CHECK(clean_stats.retries == 0);

  LatticeStore faulty_store;
  FakeUplink faulty(faulty_store);
  faulty.drop_acks = {2, 5};
  faulty.refuse_sends = {4};
  NodeRunStats stats = run_node(spec, spec.sensors[0], {}, faulty, "k", opts);

  CHECK(stats.retries >= 3);
  CHECK(stats.frames == clean_stats.frames);
  CHECK(stats.snippets == clean_stats.snippets);
  CHECK(faulty.ingestor().duplicates() >= 2);  // retransmits after dropped acks
  CHECK(faulty_store.digest() == clean_store.digest());
  CHECK(faulty.ingestor().snippets().size() == clean.ingestor().snippets().size());
}

TEST_CASE("the node halts when the retry budget is exhausted") {
  ScenarioSpec spec = make_spec(60);
  LatticeStore store;
  FakeUplink uplink(store);
  uplink.fail_connects = 1000;

  NodeOptions opts = fast_opts();
  opts.max_attempts = 3;
  std::vector<int> sleeps;
  opts.sleep_fn = [&](int ms) { sleeps.push_back(ms); };

  try {
    run_node(spec, spec.sensors[0], {}, uplink, "k", opts);
    FAIL("expected runtime_error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("after 3 attempts") != std::string::npos);
    CHECK(std::string(e.what()).find("n1") != std::string::npos);
  }
  REQUIRE(sleeps.size() == 2);  // sleeps precede attempts 2 and 3
  CHECK(sleeps[0] >= 500);
  CHECK(sleeps[0] <= 1000);
  CHECK(sleeps[1] >= 1000);
  CHECK(sleeps[1] <= 2000);
  CHECK(store.total_frames() == 0);
}

TEST_CASE("a server error halts the node with a diagnostic") {
  ScenarioSpec spec = make_spec(60);
  LatticeStore store;
  FakeUplink uplink(store, "right-key");
  try {
    run_node(spec, spec.sensors[0], {}, uplink, "wrong-key", fast_opts());
    FAIL("expected runtime_error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("AUTH") != std::string::npos);
  }
  CHECK(store.total_frames() == 0);
}

TEST_CASE("snippet records are scheduled, tagged and digested deterministically") {
  ScenarioSpec spec = make_spec(600);
  const int64_t t0 = spec.origin_epoch.s;
  Timeline timeline{
      {SourceClass::Jackhammer, Timestamp{t0}, Timestamp{t0 + 600}, Level{90000},
       GeoPoint{1.0, 0.0}},
      {SourceClass::Siren, Timestamp{t0 + 100}, Timestamp{t0 + 400}, Level{85000},
       GeoPoint{0.0, 2.0}},
  };
  NodeOptions opts = fast_opts();
  opts.snippet_mean_interval_s = 40.0;

  LatticeStore store;
  FakeUplink uplink(store);
  NodeRunStats stats = run_node(spec, spec.sensors[0], timeline, uplink, "k", opts);

  auto snips = uplink.ingestor().snippets();
  REQUIRE(!snips.empty());
  CHECK(stats.snippets == int64_t(snips.size()));

  // Independent schedule recomputation from the documented stream.
  RngStream expect_rng(spec.seed, "snippets/n1");
  double next = t0 + expect_rng.exponential(40.0);
  std::vector<int64_t> expect_starts;
  while (next < double(t0 + 600)) {
    expect_starts.push_back(int64_t(next));
    next += expect_rng.exponential(40.0);
  }
  REQUIRE(snips.size() == expect_starts.size());

  for (size_t i = 0; i < snips.size(); ++i) {
    const SnippetRecord& sn = snips[i];
    CHECK(sn.seq == i);  // gap-free, own sequence space
    CHECK(sn.start.s == expect_starts[i]);
    CHECK(sn.duration_s == 10);

    // Tags: classes of ground-truth events overlapping the clip window.
    std::vector<SourceClass> want{SourceClass::Jackhammer};
    if (sn.start.s < t0 + 400 && t0 + 100 < sn.start.s + 10)
      want.push_back(SourceClass::Siren);
    CHECK(sn.truth_tags == want);

    uint64_t h = fnv1a64("n1");
    h = fnv1a64(":", h);
    h = fnv1a64(std::to_string(sn.start.s), h);
    char buf[17];
    snprintf(buf, sizeof buf, "%llx", static_cast<unsigned long long>(h));
    CHECK(sn.payload_digest == buf);
  }

  // Disabled scheduling yields no snippets.
  LatticeStore store2;
  FakeUplink uplink2(store2);
  NodeRunStats none = run_node(spec, spec.sensors[0], timeline, uplink2, "k", fast_opts());
  CHECK(none.snippets == 0);
}

TEST_CASE("node options are validated") {
  ScenarioSpec spec = make_spec(60);
  LatticeStore store;
  FakeUplink uplink(store);
  NodeOptions opts = fast_opts();
  opts.batch_seconds = 0;
  CHECK_THROWS_AS(run_node(spec, spec.sensors[0], {}, uplink, "k", opts), InvalidInput);
}

TEST_CASE("delivery over a real socket matches the in-memory path") {
  ScenarioSpec spec = make_spec(180);
  spec.sensors[0].noise_sigma_db = 0.5;
  NodeOptions opts = fast_opts();
  opts.snippet_mean_interval_s = 50.0;

  LatticeStore mem_store;
  FakeUplink mem(mem_store);
  NodeRunStats mem_stats = run_node(spec, spec.sensors[0], {}, mem, "k", opts);

  LatticeStore srv_store;
  ServerConfig cfg;
  cfg.port = 0;
  cfg.key = "k";
  IngestServer server(srv_store, cfg);
  server.start();
  TcpUplink uplink("127.0.0.1", server.port());
  NodeRunStats stats = run_node(spec, spec.sensors[0], {}, uplink, "k", opts);
  server.stop();

  CHECK(stats.frames == mem_stats.frames);
  CHECK(stats.batches == mem_stats.batches);
  CHECK(stats.snippets == mem_stats.snippets);
  CHECK(srv_store.digest() == mem_store.digest());
  CHECK(server.ingestor().snippets().size() == size_t(mem_stats.snippets));
}
