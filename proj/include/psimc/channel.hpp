#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>

#include "psimc/frame.hpp"

namespace psimc::net {

inline constexpr std::chrono::milliseconds kDefaultRecvTimeout{30000};

// Reliable, ordered, duplex frame transport. send blocks until the frame is
// handed off; recv blocks until a frame arrives, the timeout expires
// (ChannelError "timeout"), or the peer goes away (ChannelError "closed").
class Channel {
  public:
    virtual ~Channel() = default;
    virtual void send(const Frame& f) = 0;
    virtual Frame recv(std::chrono::milliseconds timeout = kDefaultRecvTimeout) = 0;
};

// Two in-process endpoints joined by FIFO queues. Frames cross the queue in
// encoded form, so both transports exercise the same wire encoding.
std::pair<std::shared_ptr<Channel>, std::shared_ptr<Channel>> pair_memory_channels();

// Bound listening socket on "host:port" (IPv4, port 0 picks a free port).
// Splitting bind from accept lets a process publish the chosen port before
// blocking on the peer.
class TcpListener {
  public:
    explicit TcpListener(const std::string& address);
    ~TcpListener();
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    std::uint16_t port() const { return port_; }

    // Accepts exactly one peer; ChannelError on timeout.
    std::shared_ptr<Channel> accept(std::chrono::milliseconds timeout = kDefaultRecvTimeout);

  private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

// Bind, publish nothing, accept one peer: listener convenience in one call.
std::shared_ptr<Channel> tcp_listen(const std::string& address,
                                    std::uint16_t* bound_port = nullptr,
                                    std::chrono::milliseconds accept_timeout =
                                        kDefaultRecvTimeout);

std::shared_ptr<Channel> tcp_connect(const std::string& address);

}  // namespace psimc::net
