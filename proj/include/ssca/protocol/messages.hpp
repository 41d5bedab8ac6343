#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace ssca {

enum class MessageKind : std::uint8_t {
  ModelBroadcast = 1,
  BatchAnnounce = 2,
  QObjective = 3,
  QConstraint = 4,
  HExchange = 5,
  QAggregate = 6,
};

const char* kind_name(MessageKind kind) noexcept;

inline constexpr std::string_view kWireMagic = "SSCAFL01";
inline constexpr std::uint16_t kServerId = 0xFFFF;
// kind(1) + round(4) + sender(2) + payload length(4)
inline constexpr std::size_t kFrameHeaderBytes = 11;

/// One server/client payload. BatchAnnounce carries `indices`, every other
/// kind carries `reals`; the element count equals the product of `dims`.
struct RoundMessage {
  MessageKind kind = MessageKind::ModelBroadcast;
  std::uint32_t round = 0;
  std::uint16_t sender = 0;
  std::vector<std::uint32_t> dims;
  std::vector<double> reals;
  std::vector<std::uint32_t> indices;

  std::size_t element_count() const noexcept;
  bool operator==(const RoundMessage&) const = default;
};

RoundMessage make_real_message(MessageKind kind, std::uint32_t round, std::uint16_t sender,
                               std::vector<std::uint32_t> dims, std::vector<double> reals);
RoundMessage make_batch_announce(std::uint32_t round, std::uint16_t sender,
                                 const std::vector<std::size_t>& indices);

/// Throws ProtocolError when the payload disagrees with its declared dims or
/// the kind's schema.
void validate(const RoundMessage& msg);

/// Encoded frame size without building it.
std::size_t frame_size(const RoundMessage& msg);

void append_frame(std::vector<std::uint8_t>& out, const RoundMessage& msg);

/// Decodes one frame starting at `offset` and advances it past the frame.
/// Offsets in errors are relative to the start of `bytes`.
RoundMessage decode_frame(std::span<const std::uint8_t> bytes, std::size_t& offset);

/// Payload length field of a frame header (bytes must hold a full header).
std::uint32_t frame_payload_length(std::span<const std::uint8_t> header);

/// Magic followed by exactly one frame.
std::vector<std::uint8_t> encode_message(const RoundMessage& msg);
RoundMessage decode_message(std::span<const std::uint8_t> bytes);

}  // namespace ssca
