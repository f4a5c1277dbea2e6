#include "noisegrid/ingest.hpp"

#include <ctime>
#include <stdexcept>

namespace noisegrid {

std::pair<std::string, std::string> validate_batch(const BatchMsg& m) {
  if (m.sensor.empty()) return {kErrProto, "empty sensor id"};
  for (size_t i = 0; i < m.frames.size(); ++i) {
    const SplFrame& f = m.frames[i];
    if (f.level.mdb < kLevelFloor.mdb || f.level.mdb > kLevelCeiling.mdb) {
      return {kErrRange, "frame level " + std::to_string(f.level.mdb) +
                             " mdB outside [" + std::to_string(kLevelFloor.mdb) +
                             "," + std::to_string(kLevelCeiling.mdb) + "]"};
    }
    if (i > 0 && f.t.s <= m.frames[i - 1].t.s)
      return {kErrProto, "frame timestamps not strictly increasing"};
  }
  return {"", ""};
}

Ingestor::Ingestor(LatticeStore& store, IngestConfig cfg)
    : store_(store), cfg_(std::move(cfg)) {
  if (!cfg_.log_path.empty()) {
    log_.open(cfg_.log_path, std::ios::app);
    if (!log_) throw std::runtime_error("cannot open log for append: " + cfg_.log_path);
  }
}

Ingestor::~Ingestor() { flush(); }

Ingestor::SensorState& Ingestor::state_for(const SensorId& sensor) {
  auto it = sensors_.find(sensor);
  if (it == sensors_.end())
    it = sensors_.emplace(sensor, SensorState(cfg_.dedup_window)).first;
  return it->second;
}

void Ingestor::log_append(const WireMessage& m, Timestamp recv) {
  if (!log_.is_open()) return;
  log_ << encode_log_record(m, recv) << '\n';
  log_.flush();  // acked implies durable
  if (!log_) throw std::runtime_error("log write failed: " + cfg_.log_path);
}

Ingestor::Outcome Ingestor::apply(const BatchMsg& m, Timestamp recv) {
  auto [code, detail] = validate_batch(m);
  if (!code.empty()) {
    ++rejects_;
    return {Outcome::Rejected, code, detail};
  }
  std::lock_guard lock(mu_);
  SeqTracker& tracker = state_for(m.sensor).batches;
  if (tracker.seen(m.seq)) {
    ++duplicates_;
    return {Outcome::Duplicate, "", ""};
  }
  if (!tracker.in_window(m.seq)) {
    ++rejects_;
    return {Outcome::Rejected, kErrProto,
            "seq " + std::to_string(m.seq) + " outside dedup window"};
  }
  log_append(m, recv);
  store_.insert(m.sensor, m.frames);
  tracker.mark(m.seq);
  ++batches_applied_;
  frames_applied_ += m.frames.size();
  return {Outcome::Applied, "", ""};
}

Ingestor::Outcome Ingestor::apply(const SnippetRecord& m, Timestamp recv) {
  if (m.sensor.empty()) {
    ++rejects_;
    return {Outcome::Rejected, kErrProto, "empty sensor id"};
  }
  if (m.duration_s != 10) {
    ++rejects_;
    return {Outcome::Rejected, kErrProto,
            "snippet duration must be 10 s, got " + std::to_string(m.duration_s)};
  }
  std::lock_guard lock(mu_);
  SeqTracker& tracker = state_for(m.sensor).snips;
  if (tracker.seen(m.seq)) {
    ++duplicates_;
    return {Outcome::Duplicate, "", ""};
  }
  if (!tracker.in_window(m.seq)) {
    ++rejects_;
    return {Outcome::Rejected, kErrProto,
            "seq " + std::to_string(m.seq) + " outside dedup window"};
  }
  log_append(m, recv);
  snippets_.push_back(m);
  tracker.mark(m.seq);
  ++snippets_applied_;
  return {Outcome::Applied, "", ""};
}

void Ingestor::flush() {
  std::lock_guard lock(mu_);
  if (log_.is_open()) log_.flush();
}

std::vector<SnippetRecord> Ingestor::snippets() const {
  std::lock_guard lock(mu_);
  return snippets_;
}

IngestServer::IngestServer(LatticeStore& store, ServerConfig cfg)
    : cfg_(cfg),
      ingestor_(store, IngestConfig{cfg.key, cfg.log_path, cfg.dedup_window}) {}

IngestServer::~IngestServer() { stop(); }

void IngestServer::start() {
  listener_ = TcpListener::bind_on(cfg_.port);
  started_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

uint16_t IngestServer::port() const { return listener_.port(); }

void IngestServer::accept_loop() {
  while (!stopping_) {
    auto sock = listener_.accept();
    if (!sock) break;
    auto session = std::make_shared<Session>();
    session->sock = std::move(*sock);
    {
      std::lock_guard lock(sessions_mu_);
      reap_finished();
      sessions_.push_back(session);
    }
    ++sessions_opened_;
    session->thread = std::thread([this, session] { run_session(session); });
  }
}

// Caller must hold sessions_mu_. Only the acceptor and stop() call this, and
// stop() only after the acceptor has been joined, so joins never race.
void IngestServer::reap_finished() {
  auto it = sessions_.begin();
  while (it != sessions_.end()) {
    if ((*it)->done) {
      if ((*it)->thread.joinable()) (*it)->thread.join();
      it = sessions_.erase(it);
    } else {
      ++it;
    }
  }
}

void IngestServer::run_session(std::shared_ptr<Session> s) {
  auto send = [&](const WireMessage& m) {
    return s->sock.send_all(encode_message(m) + "\n");
  };

  std::string line;
  SensorId bound_sensor;
  bool authed = false;
  for (;;) {
    RecvStatus rs = s->sock.recv_line(line, -1);
    if (rs != RecvStatus::Ok) break;
    if (line.empty()) continue;

    WireMessage msg;
    try {
      msg = decode_message(line);
    } catch (const InvalidInput& e) {
      send(ErrMsg{kErrProto, e.what()});
      break;
    }

    if (!authed) {
      const HelloMsg* hello = std::get_if<HelloMsg>(&msg);
      if (!hello) {
        send(ErrMsg{kErrProto, "expected hello before data"});
        break;
      }
      if (hello->key != cfg_.key) {
        ++auth_failures_;
        send(ErrMsg{kErrAuth, "bad key"});
        break;
      }
      bound_sensor = hello->sensor;
      authed = true;
      continue;
    }

    Timestamp recv{int64_t(::time(nullptr))};
    Ingestor::Outcome out{};
    uint64_t seq = 0;
    if (const BatchMsg* b = std::get_if<BatchMsg>(&msg)) {
      if (b->sensor != bound_sensor) {
        send(ErrMsg{kErrProto, "sensor mismatch with hello"});
        break;
      }
      seq = b->seq;
      out = ingestor_.apply(*b, recv);
    } else if (const SnippetRecord* sn = std::get_if<SnippetRecord>(&msg)) {
      if (sn->sensor != bound_sensor) {
        send(ErrMsg{kErrProto, "sensor mismatch with hello"});
        break;
      }
      seq = sn->seq;
      out = ingestor_.apply(*sn, recv);
    } else {
      send(ErrMsg{kErrProto, "unexpected message type"});
      break;
    }

    if (out.kind == Ingestor::Outcome::Rejected) {
      // RANGE leaves the session open (bad data, healthy protocol);
      // everything else is a protocol fault.
      if (!send(ErrMsg{out.err_code, out.err_detail})) break;
      if (out.err_code != kErrRange) break;
      continue;
    }
    if (!send(AckMsg{seq})) break;
  }
  // Shutdown (not close) so stop() can safely poke the same socket; the fd is
  // released when the reaped Session is destroyed.
  s->sock.shutdown_both();
  s->done = true;
}

void IngestServer::stop() {
  if (!started_) return;
  stopping_ = true;
  listener_.close();
  if (acceptor_.joinable()) acceptor_.join();

  // The acceptor is gone, so sessions_ can no longer grow; session threads
  // only flip their done flag.
  std::lock_guard lock(sessions_mu_);
  for (auto& s : sessions_) s->sock.shutdown_both();
  for (auto& s : sessions_)
    if (s->thread.joinable()) s->thread.join();
  sessions_.clear();
  ingestor_.flush();
  started_ = false;
  stopping_ = false;
}

ReplayStats replay_log(const std::string& path, LatticeStore& store,
                       std::vector<SnippetRecord>* snippets_out, bool lenient) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open log: " + path);

  LatticeStore* target = &store;
  Ingestor ingestor(*target, IngestConfig{"", "", 1024});
  ReplayStats stats;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ++stats.lines;
    Timestamp recv{0};
    try {
      WireMessage msg = decode_message(line, &recv);
      if (const BatchMsg* b = std::get_if<BatchMsg>(&msg)) {
        auto out = ingestor.apply(*b, recv);
        if (out.kind == Ingestor::Outcome::Applied) ++stats.batches_applied;
        else if (out.kind == Ingestor::Outcome::Duplicate) ++stats.duplicates;
        else throw InvalidInput(out.err_detail);
      } else if (const SnippetRecord* sn = std::get_if<SnippetRecord>(&msg)) {
        auto out = ingestor.apply(*sn, recv);
        if (out.kind == Ingestor::Outcome::Applied) ++stats.snippets_applied;
        else if (out.kind == Ingestor::Outcome::Duplicate) ++stats.duplicates;
        else throw InvalidInput(out.err_detail);
      } else {
        throw InvalidInput("log line is not a batch or snippet record");
      }
    } catch (const InvalidInput& e) {
      if (!lenient)
        throw InvalidInput(path + ":" + std::to_string(lineno) + ": " + e.what());
      ++stats.skipped;
    }
  }
  if (snippets_out) *snippets_out = ingestor.snippets();
  return stats;
}

}  // namespace noisegrid
