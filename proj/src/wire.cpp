#include "noisegrid/wire.hpp"

#include <json.hpp>

namespace noisegrid {
namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& what) { throw InvalidInput("wire: " + what); }

const ordered_json& need(const ordered_json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(std::string("missing field \"") + key + "\"");
  return *it;
}

std::string need_string(const ordered_json& obj, const char* key) {
  const auto& v = need(obj, key);
  if (!v.is_string()) fail(std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

int64_t need_int(const ordered_json& obj, const char* key) {
  const auto& v = need(obj, key);
  // number_unsigned covers values above INT64_MAX; those are out of range
  // for every integer field we carry.
  if (!v.is_number_integer() ||
      (v.is_number_unsigned() && v.get<uint64_t>() > uint64_t(INT64_MAX))) {
    fail(std::string("field \"") + key + "\" must be an integer");
  }
  return v.get<int64_t>();
}

uint64_t need_uint(const ordered_json& obj, const char* key) {
  int64_t v = need_int(obj, key);
  if (v < 0) fail(std::string("field \"") + key + "\" must be non-negative");
  return uint64_t(v);
}

void check_keys(const ordered_json& obj, std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) { ok = true; break; }
    if (!ok) fail("unknown field \"" + it.key() + "\"");
  }
}

}  // namespace

std::string encode_message(const WireMessage& msg) {
  ordered_json j;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, HelloMsg>) {
          j["t"] = "hello";
          j["sensor"] = m.sensor;
          j["key"] = m.key;
        } else if constexpr (std::is_same_v<T, BatchMsg>) {
          j["t"] = "batch";
          j["sensor"] = m.sensor;
          j["seq"] = m.seq;
          auto frames = ordered_json::array();
          for (const SplFrame& f : m.frames)
            frames.push_back(ordered_json::array({f.t.s, f.level.mdb}));
          j["frames"] = std::move(frames);
        } else if constexpr (std::is_same_v<T, SnippetRecord>) {
          j["t"] = "snippet";
          j["sensor"] = m.sensor;
          j["seq"] = m.seq;
          j["start"] = m.start.s;
          j["duration"] = m.duration_s;
          j["digest"] = m.payload_digest;
          auto tags = ordered_json::array();
          for (SourceClass c : m.truth_tags) tags.push_back(to_string(c));
          j["tags"] = std::move(tags);
        } else if constexpr (std::is_same_v<T, AckMsg>) {
          j["t"] = "ack";
          j["seq"] = m.seq;
        } else {
          j["t"] = "err";
          j["code"] = m.code;
          j["detail"] = m.detail;
        }
      },
      msg);
  return j.dump();
}

std::string encode_log_record(const WireMessage& msg, Timestamp recv) {
  std::string line = encode_message(msg);
  // Append "recv" inside the closing brace; the canonical encoding always
  // ends with '}'.
  line.pop_back();
  line += ",\"recv\":" + std::to_string(recv.s) + "}";
  return line;
}

WireMessage decode_message(std::string_view line, Timestamp* recv_out) {
  ordered_json j = ordered_json::parse(line, nullptr, false);
  if (j.is_discarded()) fail("not valid JSON");
  if (!j.is_object()) fail("top level must be an object");

  if (recv_out) {
    recv_out->s = 0;
    auto it = j.find("recv");
    if (it != j.end()) {
      if (!it->is_number_integer()) fail("field \"recv\" must be an integer");
      recv_out->s = it->get<int64_t>();
      j.erase(it);
    }
  }

  std::string t = need_string(j, "t");
  if (t == "hello") {
    check_keys(j, {"t", "sensor", "key"});
    return HelloMsg{need_string(j, "sensor"), need_string(j, "key")};
  }
  if (t == "batch") {
    check_keys(j, {"t", "sensor", "seq", "frames"});
    BatchMsg m;
    m.sensor = need_string(j, "sensor");
    m.seq = need_uint(j, "seq");
    const auto& frames = need(j, "frames");
    if (!frames.is_array()) fail("field \"frames\" must be an array");
    m.frames.reserve(frames.size());
    for (const auto& f : frames) {
      if (!f.is_array() || f.size() != 2 || !f[0].is_number_integer() ||
          !f[1].is_number_integer()) {
        fail("each frame must be [t_seconds, level_mdb]");
      }
      int64_t mdb = f[1].get<int64_t>();
      if (mdb < INT32_MIN || mdb > INT32_MAX) fail("frame level out of integer range");
      m.frames.push_back({Timestamp{f[0].get<int64_t>()}, Level{int32_t(mdb)}});
    }
    return m;
  }
  if (t == "snippet") {
    check_keys(j, {"t", "sensor", "seq", "start", "duration", "digest", "tags"});
    SnippetRecord m;
    m.sensor = need_string(j, "sensor");
    m.seq = need_uint(j, "seq");
    m.start = Timestamp{need_int(j, "start")};
    m.duration_s = need_int(j, "duration");
    m.payload_digest = need_string(j, "digest");
    const auto& tags = need(j, "tags");
    if (!tags.is_array()) fail("field \"tags\" must be an array");
    for (const auto& tag : tags) {
      if (!tag.is_string()) fail("tags must be strings");
      m.truth_tags.push_back(source_class_from_string(tag.get<std::string>()));
    }
    return m;
  }
  if (t == "ack") {
    check_keys(j, {"t", "seq"});
    return AckMsg{need_uint(j, "seq")};
  }
  if (t == "err") {
    check_keys(j, {"t", "code", "detail"});
    return ErrMsg{need_string(j, "code"), need_string(j, "detail")};
  }
  fail("unknown message type \"" + t + "\"");
}

}  // namespace noisegrid
