#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ssca/protocol/messages.hpp"

namespace ssca {

/// Point-to-point delivery between numbered nodes (clients 0..I-1 and
/// kServerId). Every node owns an inbox; messages are matched by
/// (kind, round, sender) so arrival order never affects aggregation.
class Transport {
 public:
  virtual ~Transport() = default;

  void send(std::uint16_t to, const RoundMessage& msg);

  /// Waits until everything sent to `node` so far is delivered, then removes
  /// and returns the matching message if present.
  std::optional<RoundMessage> take(std::uint16_t node, MessageKind kind, std::uint32_t round,
                                   std::uint16_t sender);

  /// Fault injection: silently discard everything `sender` sends.
  void drop_from(std::uint16_t sender) { dropped_.insert(sender); }
  void restore(std::uint16_t sender) { dropped_.erase(sender); }

  /// Discards undelivered leftovers, e.g. after an aborted round.
  virtual void clear() = 0;

  std::size_t bytes_sent() const noexcept { return bytes_sent_; }
  std::size_t frames_sent() const noexcept { return frames_sent_; }
  virtual std::string name() const = 0;

 protected:
  virtual void deliver(std::uint16_t to, const RoundMessage& msg) = 0;
  virtual std::optional<RoundMessage> extract(std::uint16_t node, MessageKind kind,
                                              std::uint32_t round, std::uint16_t sender) = 0;

 private:
  std::set<std::uint16_t> dropped_;
  std::size_t bytes_sent_ = 0;
  std::size_t frames_sent_ = 0;
};

/// Queues inside one process; messages are copied, never shared.
std::unique_ptr<Transport> make_inprocess_transport(const std::vector<std::uint16_t>& nodes);

/// One socketpair per node carrying the byte-exact wire format; a reader
/// thread per node decodes frames into its inbox.
std::unique_ptr<Transport> make_socket_transport(
    const std::vector<std::uint16_t>& nodes,
    std::chrono::milliseconds delivery_timeout = std::chrono::seconds(30));

enum class TransportKind { InProcess, Socket };

std::unique_ptr<Transport> make_transport(TransportKind kind, const std::vector<std::uint16_t>& nodes);

}  // namespace ssca
