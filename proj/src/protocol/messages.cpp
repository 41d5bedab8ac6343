#include "ssca/protocol/messages.hpp"

#include <bit>
#include <limits>
#include <string>

#include "ssca/errors.hpp"

namespace ssca {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint64_t get_le(std::span<const std::uint8_t> b, std::size_t at, int width) {
  std::uint64_t v = 0;
  for (int k = width - 1; k >= 0; --k) v = (v << 8) | b[at + static_cast<std::size_t>(k)];
  return v;
}

bool known_kind(std::uint8_t tag) { return tag >= 1 && tag <= 6; }

std::size_t element_bytes(MessageKind kind) { return kind == MessageKind::BatchAnnounce ? 4 : 8; }

// Product of dims, saturating so a hostile header cannot wrap around.
std::uint64_t dims_product(const std::vector<std::uint32_t>& dims) {
  std::uint64_t n = 1;
  for (std::uint32_t d : dims) {
    if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    n *= d;
  }
  return n;
}

}  // namespace

const char* kind_name(MessageKind kind) noexcept {
  switch (kind) {
    case MessageKind::ModelBroadcast: return "ModelBroadcast";
    case MessageKind::BatchAnnounce: return "BatchAnnounce";
    case MessageKind::QObjective: return "QObjective";
    case MessageKind::QConstraint: return "QConstraint";
    case MessageKind::HExchange: return "HExchange";
    case MessageKind::QAggregate: return "QAggregate";
  }
  return "unknown";
}

std::size_t RoundMessage::element_count() const noexcept {
  return kind == MessageKind::BatchAnnounce ? indices.size() : reals.size();
}

RoundMessage make_real_message(MessageKind kind, std::uint32_t round, std::uint16_t sender,
                               std::vector<std::uint32_t> dims, std::vector<double> reals) {
  RoundMessage m;
  m.kind = kind;
  m.round = round;
  m.sender = sender;
  m.dims = std::move(dims);
  m.reals = std::move(reals);
  validate(m);
  return m;
}

RoundMessage make_batch_announce(std::uint32_t round, std::uint16_t sender,
                                 const std::vector<std::size_t>& indices) {
  RoundMessage m;
  m.kind = MessageKind::BatchAnnounce;
  m.round = round;
  m.sender = sender;
  m.dims = {static_cast<std::uint32_t>(indices.size())};
  m.indices.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i > std::numeric_limits<std::uint32_t>::max()) {
      throw ProtocolError("BatchAnnounce: index exceeds 32 bits");
    }
    m.indices.push_back(static_cast<std::uint32_t>(i));
  }
  validate(m);
  return m;
}

void validate(const RoundMessage& m) {
  if (!known_kind(static_cast<std::uint8_t>(m.kind))) throw ProtocolError("unknown message kind");
  if (m.dims.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw ProtocolError("too many dimension entries");
  }
  const bool batch = m.kind == MessageKind::BatchAnnounce;
  if (batch ? !m.reals.empty() : !m.indices.empty()) {
    throw ProtocolError(std::string(kind_name(m.kind)) + ": payload of the wrong element type");
  }
  if (dims_product(m.dims) != m.element_count()) {
    throw ProtocolError(std::string(kind_name(m.kind)) + ": payload has " +
                        std::to_string(m.element_count()) + " elements, dims declare " +
                        std::to_string(dims_product(m.dims)));
  }
  if (m.kind == MessageKind::ModelBroadcast && m.element_count() == 0) {
    throw ProtocolError("ModelBroadcast: model dimension must be at least 1");
  }
  if (frame_size(m) - kFrameHeaderBytes > std::numeric_limits<std::uint32_t>::max()) {
    throw ProtocolError("payload too large for a frame");
  }
}

std::size_t frame_size(const RoundMessage& m) {
  return kFrameHeaderBytes + 2 + 4 * m.dims.size() + element_bytes(m.kind) * m.element_count();
}

void append_frame(std::vector<std::uint8_t>& out, const RoundMessage& m) {
  validate(m);
  out.reserve(out.size() + frame_size(m));
  out.push_back(static_cast<std::uint8_t>(m.kind));
  put_u32(out, m.round);
  put_u16(out, m.sender);
  put_u32(out, static_cast<std::uint32_t>(frame_size(m) - kFrameHeaderBytes));
  put_u16(out, static_cast<std::uint16_t>(m.dims.size()));
  for (std::uint32_t d : m.dims) put_u32(out, d);
  if (m.kind == MessageKind::BatchAnnounce) {
    for (std::uint32_t i : m.indices) put_u32(out, i);
  } else {
    for (double x : m.reals) put_u64(out, std::bit_cast<std::uint64_t>(x));
  }
}

std::uint32_t frame_payload_length(std::span<const std::uint8_t> header) {
  if (header.size() < kFrameHeaderBytes) throw DecodeError("truncated frame header", header.size());
  return static_cast<std::uint32_t>(get_le(header, 7, 4));
}

RoundMessage decode_frame(std::span<const std::uint8_t> b, std::size_t& offset) {
  const std::size_t start = offset;
  if (b.size() < start || b.size() - start < kFrameHeaderBytes) {
    throw DecodeError("truncated frame header", b.size());
  }
  const std::uint8_t tag = b[start];
  if (!known_kind(tag)) throw DecodeError("unknown kind tag " + std::to_string(tag), start);

  RoundMessage m;
  m.kind = static_cast<MessageKind>(tag);
  m.round = static_cast<std::uint32_t>(get_le(b, start + 1, 4));
  m.sender = static_cast<std::uint16_t>(get_le(b, start + 5, 2));
  const std::size_t payload_len = get_le(b, start + 7, 4);
  const std::size_t payload = start + kFrameHeaderBytes;
  if (b.size() - payload < payload_len) {
    throw DecodeError("payload length " + std::to_string(payload_len) + " exceeds buffer", start + 7);
  }
  const std::size_t end = payload + payload_len;
  if (payload_len < 2) throw DecodeError("payload too short for dimension count", payload);

  const std::size_t ndims = get_le(b, payload, 2);
  std::size_t at = payload + 2;
  if (end - at < 4 * ndims) throw DecodeError("dimension table overruns payload", at);
  m.dims.resize(ndims);
  for (auto& d : m.dims) {
    d = static_cast<std::uint32_t>(get_le(b, at, 4));
    at += 4;
  }
  const std::uint64_t count = dims_product(m.dims);
  const std::size_t width = element_bytes(m.kind);
  const std::size_t data_bytes = end - at;
  if (data_bytes % width != 0 || data_bytes / width != count) {
    throw DecodeError("length mismatch: dims declare " + std::to_string(count) + " elements, payload holds " +
                          std::to_string(data_bytes) + " bytes",
                      at);
  }
  if (m.kind == MessageKind::ModelBroadcast && count == 0) {
    throw DecodeError("ModelBroadcast with empty model", at);
  }
  if (m.kind == MessageKind::BatchAnnounce) {
    m.indices.resize(count);
    for (auto& i : m.indices) {
      i = static_cast<std::uint32_t>(get_le(b, at, 4));
      at += 4;
    }
  } else {
    m.reals.resize(count);
    for (auto& x : m.reals) {
      x = std::bit_cast<double>(get_le(b, at, 8));
      at += 8;
    }
  }
  offset = end;
  return m;
}

std::vector<std::uint8_t> encode_message(const RoundMessage& msg) {
  std::vector<std::uint8_t> out(kWireMagic.begin(), kWireMagic.end());
  append_frame(out, msg);
  return out;
}

RoundMessage decode_message(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kWireMagic.size()) throw DecodeError("truncated magic", bytes.size());
  for (std::size_t k = 0; k < kWireMagic.size(); ++k) {
    if (bytes[k] != static_cast<std::uint8_t>(kWireMagic[k])) throw DecodeError("bad magic", k);
  }
  std::size_t offset = kWireMagic.size();
  RoundMessage m = decode_frame(bytes, offset);
  if (offset != bytes.size()) throw DecodeError("trailing bytes after frame", offset);
  return m;
}

}  // namespace ssca
