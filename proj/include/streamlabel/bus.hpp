#ifndef STREAMLABEL_BUS_HPP
#define STREAMLABEL_BUS_HPP

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "streamlabel/message.hpp"

namespace streamlabel {

// Bounded delivery queue shared by the in-process and TCP transports.
// Queues hold encoded bytes so both transports deliver identical payloads.
// Overflow drops the OLDEST message and counts it.
class Subscription {
public:
    explicit Subscription(std::string topic, std::size_t queue_capacity)
        : topic_(std::move(topic)), capacity_(queue_capacity == 0 ? 1 : queue_capacity) {}

    const std::string& topic() const { return topic_; }
    std::size_t capacity() const { return capacity_; }

    void deliver(std::vector<std::uint8_t> payload) {
        {
            std::lock_guard lock(mutex_);
            if (q_.size() >= capacity_) {
                q_.pop_front();
                ++dropped_;
            }
            q_.push_back(std::move(payload));
        }
        cv_.notify_one();
    }

    std::optional<std::vector<std::uint8_t>> take_bytes(std::chrono::milliseconds timeout) {
        std::unique_lock lock(mutex_);
        if (!cv_.wait_for(lock, timeout, [&] { return !q_.empty(); })) return std::nullopt;
        std::vector<std::uint8_t> payload = std::move(q_.front());
        q_.pop_front();
        return payload;
    }

    std::optional<FrameMessage> take(std::chrono::milliseconds timeout) {
        auto payload = take_bytes(timeout);
        if (!payload) return std::nullopt;
        return decode_message(*payload);
    }

    std::uint64_t dropped() const {
        std::lock_guard lock(mutex_);
        return dropped_;
    }

    std::size_t queued() const {
        std::lock_guard lock(mutex_);
        return q_.size();
    }

private:
    std::string topic_;
    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::vector<std::uint8_t>> q_;
    std::uint64_t dropped_ = 0;
};

class Bus;

// Handle returned by advertise(). Publishing through it delivers to every
// subscription attached at publish time; the publisher never learns who
// received the message beyond the returned count.
class Publisher {
public:
    Publisher() = default;
    std::size_t publish(const FrameMessage& msg) const;
    std::size_t publish_bytes(std::vector<std::uint8_t> payload) const;
    const std::string& topic() const { return topic_; }

private:
    friend class Bus;
    Publisher(Bus* bus, std::string topic) : bus_(bus), topic_(std::move(topic)) {}
    Bus* bus_ = nullptr;
    std::string topic_;
};

// In-process topic table. Thread safe; subscriptions created after a
// publish never see that publish.
class Bus {
public:
    Publisher advertise(const std::string& topic) {
        validate_topic(topic);
        std::lock_guard lock(mutex_);
        advertised_.insert(topic);  // idempotent
        return Publisher(this, topic);
    }

    std::shared_ptr<Subscription> subscribe(const std::string& topic,
                                            std::size_t queue_capacity) {
        validate_topic(topic);
        auto sub = std::make_shared<Subscription>(topic, queue_capacity);
        std::lock_guard lock(mutex_);
        subs_[topic].push_back(sub);
        return sub;
    }

    std::size_t publish_bytes(const std::string& topic, const std::vector<std::uint8_t>& payload) {
        std::vector<std::shared_ptr<Subscription>> targets;
        {
            std::lock_guard lock(mutex_);
            auto it = subs_.find(topic);
            if (it != subs_.end()) {
                auto& list = it->second;
                for (std::size_t i = 0; i < list.size();) {
                    if (auto sp = list[i].lock()) {
                        targets.push_back(std::move(sp));
                        ++i;
                    } else {
                        list.erase(list.begin() + static_cast<std::ptrdiff_t>(i));
                    }
                }
            }
        }
        for (auto& sub : targets) sub->deliver(payload);
        return targets.size();
    }

    std::size_t publish(const std::string& topic, const FrameMessage& msg) {
        return publish_bytes(topic, encode_message(msg));
    }

    std::vector<std::string> advertised_topics() const {
        std::lock_guard lock(mutex_);
        return {advertised_.begin(), advertised_.end()};
    }

private:
    mutable std::mutex mutex_;
    std::set<std::string> advertised_;
    std::unordered_map<std::string, std::vector<std::weak_ptr<Subscription>>> subs_;
};

inline std::size_t Publisher::publish(const FrameMessage& msg) const {
    return bus_->publish(topic_, msg);
}

inline std::size_t Publisher::publish_bytes(std::vector<std::uint8_t> payload) const {
    return bus_->publish_bytes(topic_, payload);
}

}  // namespace streamlabel

#endif
