#ifndef STREAMLABEL_NET_HPP
#define STREAMLABEL_NET_HPP

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "streamlabel/bus.hpp"
#include "streamlabel/errors.hpp"
#include "streamlabel/message.hpp"

namespace streamlabel {

inline constexpr const char* kDefaultRegistryEndpoint = "127.0.0.1:11411";
inline constexpr const char* kRegistryEnvVar = "STREAMLABEL_REGISTRY";

inline std::string registry_endpoint_from_env() {
    const char* env = std::getenv(kRegistryEnvVar);
    return env && *env ? env : kDefaultRegistryEndpoint;
}

namespace net {

struct Endpoint {
    std::string host;
    std::uint16_t port = 0;

    std::string str() const { return host + ":" + std::to_string(port); }
};

inline std::optional<Endpoint> parse_endpoint(const std::string& s) {
    const auto colon = s.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= s.size()) return std::nullopt;
    Endpoint ep;
    ep.host = s.substr(0, colon);
    long port = 0;
    for (std::size_t i = colon + 1; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9') return std::nullopt;
        port = port * 10 + (s[i] - '0');
        if (port > 65535) return std::nullopt;
    }
    ep.port = static_cast<std::uint16_t>(port);
    return ep;
}

// Owning socket fd.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
    Socket& operator=(Socket&& other) noexcept {
        if (this != &other) {
            close();
            fd_ = other.fd_;
            other.fd_ = -1;
        }
        return *this;
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { close(); }

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }

    int release_fd() {
        const int fd = fd_;
        fd_ = -1;
        return fd;
    }

    void close() {
        if (fd_ >= 0) {
            ::shutdown(fd_, SHUT_RDWR);
            ::close(fd_);
            fd_ = -1;
        }
    }

private:
    int fd_ = -1;
};

inline Socket listen_on(const std::string& host, std::uint16_t port, std::uint16_t* bound_port) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw IoError("socket() failed");
    Socket s(fd);
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        throw IoError("bad listen address: " + host);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
        throw IoError("bind failed on " + host + ":" + std::to_string(port));
    if (::listen(fd, 16) != 0) throw IoError("listen failed");
    if (bound_port) {
        sockaddr_in actual{};
        socklen_t len = sizeof(actual);
        ::getsockname(fd, reinterpret_cast<sockaddr*>(&actual), &len);
        *bound_port = ntohs(actual.sin_port);
    }
    return s;
}

inline Socket connect_to(const Endpoint& ep) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw IoError("socket() failed");
    Socket s(fd);
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(ep.port);
    if (::inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) != 1)
        throw IoError("bad address: " + ep.host);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
        throw IoError("cannot connect to " + ep.str());
    return s;
}

inline bool send_all(int fd, const std::uint8_t* data, std::size_t len) {
    while (len > 0) {
        const ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
        if (n <= 0) return false;
        data += n;
        len -= static_cast<std::size_t>(n);
    }
    return true;
}

inline bool recv_exact(int fd, std::uint8_t* data, std::size_t len) {
    while (len > 0) {
        const ssize_t n = ::recv(fd, data, len, 0);
        if (n <= 0) return false;
        data += n;
        len -= static_cast<std::size_t>(n);
    }
    return true;
}

inline bool send_line(int fd, const std::string& line) {
    std::string with_nl = line;
    with_nl.push_back('\n');
    return send_all(fd, reinterpret_cast<const std::uint8_t*>(with_nl.data()), with_nl.size());
}

inline std::optional<std::string> recv_line(int fd) {
    std::string line;
    char c;
    while (true) {
        const ssize_t n = ::recv(fd, &c, 1, 0);
        if (n <= 0) return line.empty() ? std::nullopt : std::optional<std::string>(line);
        if (c == '\n') return line;
        if (c != '\r') line.push_back(c);
    }
}

// Each message on the wire: 4-byte little-endian total length, then the
// encoded FrameMessage payload.
inline bool send_framed(int fd, const std::vector<std::uint8_t>& payload) {
    std::vector<std::uint8_t> prefix;
    detail::put_u32(prefix, static_cast<std::uint32_t>(payload.size()));
    return send_all(fd, prefix.data(), prefix.size()) &&
           send_all(fd, payload.data(), payload.size());
}

inline std::optional<std::vector<std::uint8_t>> recv_framed(int fd,
                                                            std::size_t max_len = 1u << 28) {
    std::uint8_t prefix[4];
    if (!recv_exact(fd, prefix, 4)) return std::nullopt;
    const std::uint32_t len = detail::get_u32(prefix);
    if (len > max_len) return std::nullopt;
    std::vector<std::uint8_t> payload(len);
    if (!recv_exact(fd, payload.data(), len)) return std::nullopt;
    return payload;
}

}  // namespace net

// Name-resolution service: maps topic names to publisher endpoints.
// Line protocol:
//   REGISTER <topic> <host:port>   -> OK
//   UNREGISTER <topic> <host:port> -> OK
//   LOOKUP <topic>                 -> OK <n> <ep1> ... <epn>
//   LIST                           -> OK <n> <topic1> ... <topicn>
//   anything else                  -> ERR <reason>
class RegistryServer {
public:
    explicit RegistryServer(std::uint16_t port = 0, const std::string& host = "127.0.0.1") {
        listener_ = net::listen_on(host, port, &port_);
        accept_thread_ = std::thread([this] { accept_loop(); });
    }

    ~RegistryServer() { stop(); }

    std::uint16_t port() const { return port_; }
    std::string endpoint() const { return "127.0.0.1:" + std::to_string(port_); }

    void stop() {
        if (stopping_.exchange(true)) return;
        listener_.close();
        if (accept_thread_.joinable()) accept_thread_.join();
        std::vector<std::thread> workers;
        {
            std::lock_guard lock(mutex_);
            workers.swap(workers_);
            for (auto& c : conns_) c->close();
        }
        for (auto& t : workers)
            if (t.joinable()) t.join();
    }

    std::string handle_request(const std::string& line) {
        std::istringstream is(line);
        std::string cmd, topic, endpoint;
        is >> cmd;
        if (cmd == "REGISTER" || cmd == "UNREGISTER") {
            is >> topic >> endpoint;
            if (topic.empty() || endpoint.empty()) return "ERR missing argument";
            if (!is_valid_topic(topic)) return "ERR invalid topic name";
            if (!net::parse_endpoint(endpoint)) return "ERR invalid endpoint";
            std::lock_guard lock(mutex_);
            auto& eps = entries_[topic];
            if (cmd == "REGISTER") {
                if (std::find(eps.begin(), eps.end(), endpoint) == eps.end())
                    eps.push_back(endpoint);
            } else {
                std::erase(eps, endpoint);
                if (eps.empty()) entries_.erase(topic);
            }
            return "OK";
        }
        if (cmd == "LOOKUP") {
            is >> topic;
            if (topic.empty()) return "ERR missing argument";
            std::lock_guard lock(mutex_);
            auto it = entries_.find(topic);
            std::ostringstream os;
            if (it == entries_.end()) {
                os << "OK 0";
            } else {
                os << "OK " << it->second.size();
                for (const auto& ep : it->second) os << ' ' << ep;
            }
            return os.str();
        }
        if (cmd == "LIST") {
            std::lock_guard lock(mutex_);
            std::ostringstream os;
            os << "OK " << entries_.size();
            for (const auto& [name, eps] : entries_) os << ' ' << name;
            return os.str();
        }
        return "ERR unknown command";
    }

private:
    void accept_loop() {
        while (!stopping_) {
            const int fd = ::accept(listener_.fd(), nullptr, nullptr);
            if (fd < 0) break;
            auto conn = std::make_shared<net::Socket>(fd);
            std::lock_guard lock(mutex_);
            if (stopping_) break;
            conns_.push_back(conn);
            workers_.emplace_back([this, conn] { serve_conn(*conn); });
        }
    }

    void serve_conn(net::Socket& conn) {
        while (!stopping_) {
            auto line = net::recv_line(conn.fd());
            if (!line) break;
            if (line->empty()) continue;
            if (!net::send_line(conn.fd(), handle_request(*line))) break;
        }
    }

    net::Socket listener_;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread accept_thread_;
    std::mutex mutex_;
    std::map<std::string, std::vector<std::string>> entries_;
    std::vector<std::shared_ptr<net::Socket>> conns_;
    std::vector<std::thread> workers_;
};

// One-connection-per-request registry client.
class RegistryClient {
public:
    explicit RegistryClient(const std::string& endpoint = registry_endpoint_from_env()) {
        auto ep = net::parse_endpoint(endpoint);
        if (!ep) throw IoError("bad registry endpoint: " + endpoint);
        ep_ = *ep;
    }

    std::string request(const std::string& line) const {
        net::Socket conn = net::connect_to(ep_);
        if (!net::send_line(conn.fd(), line)) throw IoError("registry send failed");
        auto reply = net::recv_line(conn.fd());
        if (!reply) throw IoError("registry closed connection");
        return *reply;
    }

    void register_topic(const std::string& topic, const std::string& endpoint) const {
        expect_ok(request("REGISTER " + topic + " " + endpoint));
    }
    void unregister_topic(const std::string& topic, const std::string& endpoint) const {
        expect_ok(request("UNREGISTER " + topic + " " + endpoint));
    }

    std::vector<std::string> lookup(const std::string& topic) const {
        std::istringstream is(request("LOOKUP " + topic));
        std::string status;
        std::size_t n = 0;
        is >> status >> n;
        if (status != "OK") throw IoError("registry LOOKUP failed");
        std::vector<std::string> eps(n);
        for (auto& ep : eps) is >> ep;
        return eps;
    }

private:
    static void expect_ok(const std::string& reply) {
        if (reply.rfind("OK", 0) != 0) throw IoError("registry rejected request: " + reply);
    }

    net::Endpoint ep_;
};

// TCP publisher: binds a listener, registers it for the topic, and fans
// length-prefixed messages out to every connected subscriber. A lost peer
// is dropped; remaining peers are unaffected.
class TcpPublisher {
public:
    TcpPublisher(std::string topic, const std::string& registry_endpoint = registry_endpoint_from_env())
        : topic_(std::move(topic)), registry_(registry_endpoint) {
        validate_topic(topic_);
        listener_ = net::listen_on("127.0.0.1", 0, &port_);
        registry_.register_topic(topic_, endpoint());
        accept_thread_ = std::thread([this] { accept_loop(); });
    }

    ~TcpPublisher() {
        stopping_ = true;
        try {
            registry_.unregister_topic(topic_, endpoint());
        } catch (const IoError&) {
            // registry may already be gone at teardown
        }
        listener_.close();
        if (accept_thread_.joinable()) accept_thread_.join();
    }

    const std::string& topic() const { return topic_; }
    std::string endpoint() const { return "127.0.0.1:" + std::to_string(port_); }

    std::size_t peer_count() const {
        std::lock_guard lock(mutex_);
        return peers_.size();
    }

    bool wait_for_peers(std::size_t n, std::chrono::milliseconds timeout) const {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        while (peer_count() < n) {
            if (std::chrono::steady_clock::now() > deadline) return false;
            std::this_thread::sleep_for(std::chrono::milliseconds(1));
        }
        return true;
    }

    std::size_t publish_bytes(const std::vector<std::uint8_t>& payload) {
        std::lock_guard lock(mutex_);
        std::size_t delivered = 0;
        for (std::size_t i = 0; i < peers_.size();) {
            if (net::send_framed(peers_[i]->fd(), payload)) {
                ++delivered;
                ++i;
            } else {
                peers_.erase(peers_.begin() + static_cast<std::ptrdiff_t>(i));
            }
        }
        return delivered;
    }

    std::size_t publish(const FrameMessage& msg) { return publish_bytes(encode_message(msg)); }

private:
    void accept_loop() {
        while (!stopping_) {
            const int fd = ::accept(listener_.fd(), nullptr, nullptr);
            if (fd < 0) break;
            int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
            std::lock_guard lock(mutex_);
            peers_.push_back(std::make_unique<net::Socket>(fd));
        }
    }

    std::string topic_;
    RegistryClient registry_;
    net::Socket listener_;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread accept_thread_;
    mutable std::mutex mutex_;
    std::vector<std::unique_ptr<net::Socket>> peers_;
};

// TCP subscriber: polls the registry for publisher endpoints, connects to
// each, and funnels received frames into a Subscription queue.
class TcpSubscriber {
public:
    TcpSubscriber(const std::string& topic, std::size_t queue_capacity,
                  const std::string& registry_endpoint = registry_endpoint_from_env(),
                  std::chrono::milliseconds poll_interval = std::chrono::milliseconds(500))
        : registry_(registry_endpoint),
          sub_(std::make_shared<Subscription>(topic, queue_capacity)),
          poll_interval_(poll_interval) {
        validate_topic(topic);
        poll_once();  // fail fast if the registry is unreachable
        poll_thread_ = std::thread([this] { poll_loop(); });
    }

    ~TcpSubscriber() {
        stopping_ = true;
        cv_.notify_all();
        if (poll_thread_.joinable()) poll_thread_.join();
        {
            std::lock_guard lock(mutex_);
            for (auto& [ep, conn] : conns_) conn->close();
        }
        for (auto& t : readers_)
            if (t.joinable()) t.join();
    }

    std::shared_ptr<Subscription> subscription() { return sub_; }

    std::optional<FrameMessage> take(std::chrono::milliseconds timeout) {
        return sub_->take(timeout);
    }
    std::optional<std::vector<std::uint8_t>> take_bytes(std::chrono::milliseconds timeout) {
        return sub_->take_bytes(timeout);
    }
    std::uint64_t dropped() const { return sub_->dropped(); }

    std::size_t connection_count() const {
        std::lock_guard lock(mutex_);
        return conns_.size();
    }

    bool wait_for_connections(std::size_t n, std::chrono::milliseconds timeout) {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        while (connection_count() < n) {
            if (std::chrono::steady_clock::now() > deadline) return false;
            poll_once();
            std::this_thread::sleep_for(std::chrono::milliseconds(1));
        }
        return true;
    }

private:
    void poll_once() {
        std::vector<std::string> eps = registry_.lookup(sub_->topic());
        for (const auto& ep_str : eps) {
            auto ep = net::parse_endpoint(ep_str);
            if (!ep) continue;
            std::unique_lock lock(mutex_);
            if (conns_.count(ep_str)) continue;
            lock.unlock();
            std::shared_ptr<net::Socket> conn;
            try {
                conn = std::make_shared<net::Socket>(net::connect_to(*ep).release_fd());
            } catch (const IoError&) {
                continue;  // stale registry entry
            }
            lock.lock();
            conns_.emplace(ep_str, conn);
            readers_.emplace_back([this, ep_str, conn] { read_loop(ep_str, *conn); });
        }
    }

    void poll_loop() {
        std::unique_lock lock(poll_mutex_);
        while (!stopping_) {
            cv_.wait_for(lock, poll_interval_, [&] { return stopping_.load(); });
            if (stopping_) break;
            try {
                poll_once();
            } catch (const IoError&) {
                // registry temporarily unreachable; retry next interval
            }
        }
    }

    void read_loop(const std::string& ep_str, net::Socket& conn) {
        while (!stopping_) {
            auto payload = net::recv_framed(conn.fd());
            if (!payload) break;
            sub_->deliver(std::move(*payload));
        }
        std::lock_guard lock(mutex_);
        conns_.erase(ep_str);
    }

    RegistryClient registry_;
    std::shared_ptr<Subscription> sub_;
    std::chrono::milliseconds poll_interval_;
    std::atomic<bool> stopping_{false};
    std::mutex poll_mutex_;
    std::condition_variable cv_;
    std::thread poll_thread_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<net::Socket>> conns_;
    std::vector<std::thread> readers_;
};

}  // namespace streamlabel

#endif
