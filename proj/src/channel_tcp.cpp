#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "psimc/channel.hpp"

namespace psimc::net {

namespace {

[[noreturn]] void sys_fail(const std::string& what) {
    throw ChannelError(what + ": " + std::strerror(errno));
}

struct Address {
    in_addr host;
    std::uint16_t port;
};

Address parse_address(const std::string& text) {
    auto colon = text.rfind(':');
    if (colon == std::string::npos)
        throw ChannelError("address '" + text + "' is not host:port");
    std::string host = text.substr(0, colon);
    std::string port_text = text.substr(colon + 1);
    if (host == "localhost") host = "127.0.0.1";
    Address addr{};
    if (inet_pton(AF_INET, host.c_str(), &addr.host) != 1)
        throw ChannelError("bad IPv4 host '" + host + "'");
    char* end = nullptr;
    long port = std::strtol(port_text.c_str(), &end, 10);
    if (end == port_text.c_str() || *end != '\0' || port < 0 || port > 65535)
        throw ChannelError("bad port '" + port_text + "'");
    addr.port = static_cast<std::uint16_t>(port);
    return addr;
}

class Socket {
  public:
    Socket() : fd_(-1) {}
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
    Socket& operator=(Socket&& o) noexcept {
        if (this != &o) {
            reset();
            fd_ = o.fd_;
            o.fd_ = -1;
        }
        return *this;
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { reset(); }

    int fd() const { return fd_; }

    int release() {
        int fd = fd_;
        fd_ = -1;
        return fd;
    }

    void reset() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

  private:
    int fd_;
};

class TcpChannel final : public Channel {
  public:
    explicit TcpChannel(Socket sock) : sock_(std::move(sock)) {
        int one = 1;
        setsockopt(sock_.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    }

    void send(const Frame& f) override {
        auto bytes = encode_frame(f);
        std::size_t sent = 0;
        while (sent < bytes.size()) {
            ssize_t n = ::send(sock_.fd(), bytes.data() + sent, bytes.size() - sent,
                               MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                sys_fail("send");
            }
            sent += static_cast<std::size_t>(n);
        }
    }

    Frame recv(std::chrono::milliseconds timeout) override {
        auto deadline = std::chrono::steady_clock::now() + timeout;
        std::uint8_t header[4];
        read_full(header, 4, deadline);
        std::uint32_t len = (static_cast<std::uint32_t>(header[0]) << 24) |
                            (static_cast<std::uint32_t>(header[1]) << 16) |
                            (static_cast<std::uint32_t>(header[2]) << 8) |
                            static_cast<std::uint32_t>(header[3]);
        if (len > limits::kMaxFrameBytes)
            throw ChannelError("frame of " + std::to_string(len) +
                               " bytes exceeds the 64 MiB cap");
        std::vector<std::uint8_t> buf(4 + static_cast<std::size_t>(len));
        std::memcpy(buf.data(), header, 4);
        read_full(buf.data() + 4, len, deadline);
        return decode_frame(buf);
    }

  private:
    void read_full(std::uint8_t* out, std::size_t n, std::chrono::steady_clock::time_point deadline) {
        std::size_t got = 0;
        while (got < n) {
            auto now = std::chrono::steady_clock::now();
            if (now >= deadline) throw ChannelError("timeout waiting for frame");
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
            pollfd pfd{sock_.fd(), POLLIN, 0};
            int rc = ::poll(&pfd, 1, static_cast<int>(left.count()) + 1);
            if (rc < 0) {
                if (errno == EINTR) continue;
                sys_fail("poll");
            }
            if (rc == 0) throw ChannelError("timeout waiting for frame");
            ssize_t r = ::read(sock_.fd(), out + got, n - got);
            if (r < 0) {
                if (errno == EINTR) continue;
                sys_fail("read");
            }
            if (r == 0) throw ChannelError("channel closed");
            got += static_cast<std::size_t>(r);
        }
    }

    Socket sock_;
};

}  // namespace

TcpListener::TcpListener(const std::string& address) {
    Address addr = parse_address(address);
    Socket listener(::socket(AF_INET, SOCK_STREAM, 0));
    if (listener.fd() < 0) sys_fail("socket");
    int one = 1;
    setsockopt(listener.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_addr = addr.host;
    sa.sin_port = htons(addr.port);
    if (::bind(listener.fd(), reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) < 0)
        sys_fail("bind");
    if (::listen(listener.fd(), 1) < 0) sys_fail("listen");
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    if (::getsockname(listener.fd(), reinterpret_cast<sockaddr*>(&bound), &len) < 0)
        sys_fail("getsockname");
    port_ = ntohs(bound.sin_port);
    fd_ = listener.release();
}

TcpListener::~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
}

std::shared_ptr<Channel> TcpListener::accept(std::chrono::milliseconds timeout) {
    pollfd pfd{fd_, POLLIN, 0};
    int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    if (rc < 0) sys_fail("poll");
    if (rc == 0) throw ChannelError("timeout waiting for peer to connect");
    int conn = ::accept(fd_, nullptr, nullptr);
    if (conn < 0) sys_fail("accept");
    return std::make_shared<TcpChannel>(Socket(conn));
}

std::shared_ptr<Channel> tcp_listen(const std::string& address, std::uint16_t* bound_port,
                                    std::chrono::milliseconds accept_timeout) {
    TcpListener listener(address);
    if (bound_port) *bound_port = listener.port();
    return listener.accept(accept_timeout);
}

std::shared_ptr<Channel> tcp_connect(const std::string& address) {
    Address addr = parse_address(address);
    Socket sock(::socket(AF_INET, SOCK_STREAM, 0));
    if (sock.fd() < 0) sys_fail("socket");
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_addr = addr.host;
    sa.sin_port = htons(addr.port);
    if (::connect(sock.fd(), reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) < 0)
        sys_fail("connect to " + address);
    return std::make_shared<TcpChannel>(std::move(sock));
}

}  // namespace psimc::net
