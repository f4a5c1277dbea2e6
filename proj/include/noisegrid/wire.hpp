#pragma once

// NDJSON wire protocol shared by nodes and the ingest service.
//
// Every message is one JSON object per line, discriminated by "t":
//   {"t":"hello","sensor":...,"key":...}
//   {"t":"batch","sensor":...,"seq":N,"frames":[[t_seconds,level_mdb],...]}
//   {"t":"snippet","sensor":...,"seq":N,"start":T,"duration":10,
//    "digest":"...","tags":["Jackhammer",...]}
//   {"t":"ack","seq":N}
//   {"t":"err","code":"AUTH|PROTO|RANGE","detail":"..."}
//
// Encoding is canonical: fields always appear in the order above, no
// whitespace, UTF-8. Levels are integer millidecibels, timestamps integer
// epoch seconds. Snippets carry a sequence number from their own per-sensor
// counter so batch sequence numbers stay gap-free.

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "noisegrid/types.hpp"

namespace noisegrid {

struct HelloMsg {
  SensorId sensor;
  std::string key;
  friend bool operator==(const HelloMsg&, const HelloMsg&) = default;
};

struct BatchMsg {
  SensorId sensor;
  uint64_t seq = 0;
  std::vector<SplFrame> frames;
  friend bool operator==(const BatchMsg&, const BatchMsg&) = default;
};

struct SnippetRecord {
  SensorId sensor;
  uint64_t seq = 0;
  Timestamp start{0};
  int64_t duration_s = 10;
  std::string payload_digest;          // opaque hex string
  std::vector<SourceClass> truth_tags; // ground truth, simulation-only
  friend bool operator==(const SnippetRecord&, const SnippetRecord&) = default;
};

struct AckMsg {
  uint64_t seq = 0;
  friend bool operator==(const AckMsg&, const AckMsg&) = default;
};

// Protocol error codes. Kept as strings on the wire.
inline constexpr const char* kErrAuth = "AUTH";
inline constexpr const char* kErrProto = "PROTO";
inline constexpr const char* kErrRange = "RANGE";

struct ErrMsg {
  std::string code;
  std::string detail;
  friend bool operator==(const ErrMsg&, const ErrMsg&) = default;
};

using WireMessage = std::variant<HelloMsg, BatchMsg, SnippetRecord, AckMsg, ErrMsg>;

// One canonical JSON line, without the trailing newline.
std::string encode_message(const WireMessage& msg);

// Parses one line. Throws InvalidInput on anything malformed: bad JSON,
// unknown "t", missing/extra/mistyped fields, non-integer levels or
// timestamps. When `recv_out` is non-null a trailing "recv" field (added by
// the ingest log) is accepted and returned through it; otherwise "recv" is
// rejected like any other unknown field.
WireMessage decode_message(std::string_view line, Timestamp* recv_out = nullptr);

// Log-record encoding: the accepted message with server receive time.
std::string encode_log_record(const WireMessage& msg, Timestamp recv);

}  // namespace noisegrid
