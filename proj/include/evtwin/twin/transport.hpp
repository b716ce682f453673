#pragma once

// Message channels between the edge driver and the cloud actor. The
// in-process link dispatches straight into the actor; the socket link
// speaks newline-delimited JSON over a TCP stream, one TwinMessage per
// line. Both deliver reliably and in order.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>

#include "evtwin/twin/cloud.hpp"
#include "evtwin/twin/message.hpp"

namespace evtwin::twin {

class CloudLink {
public:
    virtual ~CloudLink() = default;
    virtual void send(const TwinMessage& msg) = 0;
    virtual TwinMessage recv() = 0;
};

class InProcessLink : public CloudLink {
public:
    explicit InProcessLink(CloudActor& cloud) : cloud_(cloud) {}

    void send(const TwinMessage& msg) override {
        for (auto& reply : cloud_.handle(msg)) inbox_.push_back(std::move(reply));
    }

    TwinMessage recv() override {
        if (inbox_.empty()) throw std::logic_error("in-process link: no pending reply");
        TwinMessage m = std::move(inbox_.front());
        inbox_.pop_front();
        return m;
    }

private:
    CloudActor& cloud_;
    std::deque<TwinMessage> inbox_;
};

// Owning fd wrapper with buffered line reads.
class LineSocket {
public:
    LineSocket() = default;
    explicit LineSocket(int fd) : fd_(fd) {}
    ~LineSocket() { close_fd(); }
    LineSocket(LineSocket&& other) noexcept : fd_(other.fd_), buffer_(std::move(other.buffer_)) {
        other.fd_ = -1;
    }
    LineSocket& operator=(LineSocket&& other) noexcept {
        if (this != &other) {
            close_fd();
            fd_ = other.fd_;
            buffer_ = std::move(other.buffer_);
            other.fd_ = -1;
        }
        return *this;
    }
    LineSocket(const LineSocket&) = delete;
    LineSocket& operator=(const LineSocket&) = delete;

    bool valid() const { return fd_ >= 0; }

    void send_line(const std::string& line) {
        std::string framed = line;
        framed += '\n';
        std::size_t sent = 0;
        while (sent < framed.size()) {
            ssize_t n = ::send(fd_, framed.data() + sent, framed.size() - sent, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw std::runtime_error(std::string("socket send failed: ") + std::strerror(errno));
            }
            sent += static_cast<std::size_t>(n);
        }
    }

    // One line without the terminator; nullopt on clean EOF.
    std::optional<std::string> recv_line() {
        while (true) {
            auto pos = buffer_.find('\n');
            if (pos != std::string::npos) {
                std::string line = buffer_.substr(0, pos);
                buffer_.erase(0, pos + 1);
                return line;
            }
            char chunk[4096];
            ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw std::runtime_error(std::string("socket recv failed: ") + std::strerror(errno));
            }
            if (n == 0) {
                if (!buffer_.empty())
                    throw std::runtime_error("connection closed mid-line");
                return std::nullopt;
            }
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    void shutdown_write() {
        if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
    }

private:
    void close_fd() {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

    int fd_ = -1;
    std::string buffer_;
};

class SocketLink : public CloudLink {
public:
    explicit SocketLink(LineSocket socket) : socket_(std::move(socket)) {}

    void send(const TwinMessage& msg) override { socket_.send_line(encode_line(msg)); }

    TwinMessage recv() override {
        auto line = socket_.recv_line();
        if (!line.has_value()) throw std::runtime_error("cloud closed the connection");
        return decode_line(*line);
    }

    LineSocket& socket() { return socket_; }

private:
    LineSocket socket_;
};

// Loopback listener on an ephemeral port; returns (fd, port).
inline std::pair<int, std::uint16_t> listen_loopback() {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw std::runtime_error("cannot create socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd);
        throw std::runtime_error(std::string("bind failed: ") + std::strerror(errno));
    }
    if (::listen(fd, 1) != 0) {
        ::close(fd);
        throw std::runtime_error(std::string("listen failed: ") + std::strerror(errno));
    }
    socklen_t len = sizeof(addr);
    if (::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
        ::close(fd);
        throw std::runtime_error("getsockname failed");
    }
    return {fd, ntohs(addr.sin_port)};
}

inline LineSocket accept_one(int listen_fd) {
    while (true) {
        int conn = ::accept(listen_fd, nullptr, nullptr);
        if (conn >= 0) return LineSocket(conn);
        if (errno != EINTR)
            throw std::runtime_error(std::string("accept failed: ") + std::strerror(errno));
    }
}

inline LineSocket connect_loopback(std::uint16_t port) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw std::runtime_error("cannot create socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    while (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        if (errno == EINTR) continue;
        ::close(fd);
        throw std::runtime_error(std::string("connect failed: ") + std::strerror(errno));
    }
    return LineSocket(fd);
}

// Cloud side of the socket transport: dispatch every inbound line into the
// actor until the peer closes its write side.
inline void serve_cloud(LineSocket& socket, CloudActor& cloud) {
    while (true) {
        auto line = socket.recv_line();
        if (!line.has_value()) return;
        TwinMessage msg = decode_line(*line);
        for (const auto& reply : cloud.handle(msg)) socket.send_line(encode_line(reply));
    }
}

}  // namespace evtwin::twin
