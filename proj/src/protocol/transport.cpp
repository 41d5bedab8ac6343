#include "ssca/protocol/transport.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <map>
#include <mutex>
#include <thread>

#include "ssca/errors.hpp"

namespace ssca {

void Transport::send(std::uint16_t to, const RoundMessage& msg) {
  validate(msg);
  if (dropped_.count(msg.sender) != 0) return;
  deliver(to, msg);
  bytes_sent_ += frame_size(msg);
  ++frames_sent_;
}

std::optional<RoundMessage> Transport::take(std::uint16_t node, MessageKind kind, std::uint32_t round,
                                            std::uint16_t sender) {
  return extract(node, kind, round, sender);
}

namespace {

std::optional<RoundMessage> pop_match(std::deque<RoundMessage>& inbox, MessageKind kind,
                                      std::uint32_t round, std::uint16_t sender) {
  for (auto it = inbox.begin(); it != inbox.end(); ++it) {
    if (it->kind == kind && it->round == round && it->sender == sender) {
      RoundMessage m = std::move(*it);
      inbox.erase(it);
      return m;
    }
  }
  return std::nullopt;
}

class InProcessTransport final : public Transport {
 public:
  explicit InProcessTransport(const std::vector<std::uint16_t>& nodes) {
    for (auto n : nodes) inboxes_[n];
  }

  void clear() override {
    for (auto& [id, q] : inboxes_) q.clear();
  }
  std::string name() const override { return "inprocess"; }

 protected:
  void deliver(std::uint16_t to, const RoundMessage& msg) override { inbox(to).push_back(msg); }

  std::optional<RoundMessage> extract(std::uint16_t node, MessageKind kind, std::uint32_t round,
                                      std::uint16_t sender) override {
    return pop_match(inbox(node), kind, round, sender);
  }

 private:
  std::deque<RoundMessage>& inbox(std::uint16_t node) {
    auto it = inboxes_.find(node);
    if (it == inboxes_.end()) throw ProtocolError("unknown node " + std::to_string(node));
    return it->second;
  }

  std::map<std::uint16_t, std::deque<RoundMessage>> inboxes_;
};

bool read_exact(int fd, std::uint8_t* dst, std::size_t n) {
  while (n > 0) {
    const ssize_t got = ::read(fd, dst, n);
    if (got == 0) return false;
    if (got < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    dst += got;
    n -= static_cast<std::size_t>(got);
  }
  return true;
}

void write_all(int fd, const std::uint8_t* src, std::size_t n) {
  while (n > 0) {
    const ssize_t put = ::send(fd, src, n, MSG_NOSIGNAL);
    if (put < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(std::string("socket write failed: ") + std::strerror(errno));
    }
    src += put;
    n -= static_cast<std::size_t>(put);
  }
}

class SocketTransport final : public Transport {
 public:
  SocketTransport(const std::vector<std::uint16_t>& nodes, std::chrono::milliseconds timeout)
      : timeout_(timeout) {
    for (auto n : nodes) {
      auto link = std::make_unique<Link>();
      int fds[2];
      if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) {
        throw ProtocolError(std::string("socketpair failed: ") + std::strerror(errno));
      }
      link->write_fd = fds[0];
      link->read_fd = fds[1];
      Link* raw = link.get();
      links_.emplace(n, std::move(link));
      write_all(raw->write_fd, reinterpret_cast<const std::uint8_t*>(kWireMagic.data()), kWireMagic.size());
      raw->reader = std::thread([raw] { reader_loop(*raw); });
    }
  }

  ~SocketTransport() override {
    for (auto& [id, link] : links_) ::shutdown(link->write_fd, SHUT_WR);
    for (auto& [id, link] : links_) {
      if (link->reader.joinable()) link->reader.join();
      ::close(link->write_fd);
      ::close(link->read_fd);
    }
  }

  void clear() override {
    for (auto& [id, link] : links_) {
      std::unique_lock lock(link->mu);
      wait_delivered(*link, lock);
      link->inbox.clear();
    }
  }
  std::string name() const override { return "socket"; }

 protected:
  void deliver(std::uint16_t to, const RoundMessage& msg) override {
    Link& link = find(to);
    std::vector<std::uint8_t> frame;
    append_frame(frame, msg);
    write_all(link.write_fd, frame.data(), frame.size());
    std::lock_guard lock(link.mu);
    ++link.sent;
  }

  std::optional<RoundMessage> extract(std::uint16_t node, MessageKind kind, std::uint32_t round,
                                      std::uint16_t sender) override {
    Link& link = find(node);
    std::unique_lock lock(link.mu);
    wait_delivered(link, lock);
    return pop_match(link.inbox, kind, round, sender);
  }

 private:
  struct Link {
    int write_fd = -1;
    int read_fd = -1;
    std::thread reader;
    std::mutex mu;
    std::condition_variable cv;
    std::deque<RoundMessage> inbox;
    std::size_t sent = 0;
    std::size_t delivered = 0;
    std::string error;
  };

  static void fail(Link& link, const std::string& what) {
    std::lock_guard lock(link.mu);
    link.error = what;
    link.cv.notify_all();
  }

  static void reader_loop(Link& link) {
    std::vector<std::uint8_t> buf(kWireMagic.size());
    if (!read_exact(link.read_fd, buf.data(), buf.size())) return fail(link, "connection closed before magic");
    if (std::memcmp(buf.data(), kWireMagic.data(), kWireMagic.size()) != 0) {
      return fail(link, "bad magic on connection");
    }
    for (;;) {
      buf.resize(kFrameHeaderBytes);
      if (!read_exact(link.read_fd, buf.data(), kFrameHeaderBytes)) return;  // orderly shutdown
      const std::uint32_t len = frame_payload_length(buf);
      buf.resize(kFrameHeaderBytes + len);
      if (!read_exact(link.read_fd, buf.data() + kFrameHeaderBytes, len)) {
        return fail(link, "connection closed mid-frame");
      }
      try {
        std::size_t offset = 0;
        RoundMessage m = decode_frame(buf, offset);
        std::lock_guard lock(link.mu);
        link.inbox.push_back(std::move(m));
        ++link.delivered;
        link.cv.notify_all();
      } catch (const DecodeError& e) {
        return fail(link, e.what());
      }
    }
  }

  void wait_delivered(Link& link, std::unique_lock<std::mutex>& lock) {
    const bool ok = link.cv.wait_for(lock, timeout_, [&] {
      return !link.error.empty() || link.delivered >= link.sent;
    });
    if (!link.error.empty()) throw ProtocolError("socket transport: " + link.error);
    if (!ok) throw ProtocolError("socket transport: delivery timed out");
  }

  Link& find(std::uint16_t node) {
    auto it = links_.find(node);
    if (it == links_.end()) throw ProtocolError("unknown node " + std::to_string(node));
    return *it->second;
  }

  std::chrono::milliseconds timeout_;
  std::map<std::uint16_t, std::unique_ptr<Link>> links_;
};

}  // namespace

std::unique_ptr<Transport> make_inprocess_transport(const std::vector<std::uint16_t>& nodes) {
  return std::make_unique<InProcessTransport>(nodes);
}

std::unique_ptr<Transport> make_socket_transport(const std::vector<std::uint16_t>& nodes,
                                                 std::chrono::milliseconds delivery_timeout) {
  return std::make_unique<SocketTransport>(nodes, delivery_timeout);
}

std::unique_ptr<Transport> make_transport(TransportKind kind, const std::vector<std::uint16_t>& nodes) {
  if (kind == TransportKind::Socket) return make_socket_transport(nodes);
  return make_inprocess_transport(nodes);
}

}  // namespace ssca
