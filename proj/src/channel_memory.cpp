#include <condition_variable>
#include <deque>
#include <mutex>

#include "psimc/channel.hpp"

namespace psimc::net {

namespace {

struct Queue {
    std::mutex mutex;
    std::condition_variable cv;
    std::deque<std::vector<std::uint8_t>> frames;
    bool closed = false;

    void push(std::vector<std::uint8_t> bytes) {
        {
            std::lock_guard<std::mutex> lock(mutex);
            if (closed) throw ChannelError("channel closed");
            frames.push_back(std::move(bytes));
        }
        cv.notify_one();
    }

    std::vector<std::uint8_t> pop(std::chrono::milliseconds timeout) {
        std::unique_lock<std::mutex> lock(mutex);
        if (!cv.wait_for(lock, timeout, [&] { return !frames.empty() || closed; }))
            throw ChannelError("timeout waiting for frame");
        if (frames.empty()) throw ChannelError("channel closed");
        auto bytes = std::move(frames.front());
        frames.pop_front();
        return bytes;
    }

    void close() {
        {
            std::lock_guard<std::mutex> lock(mutex);
            closed = true;
        }
        cv.notify_all();
    }
};

class MemoryChannel final : public Channel {
  public:
    MemoryChannel(std::shared_ptr<Queue> in, std::shared_ptr<Queue> out)
        : in_(std::move(in)), out_(std::move(out)) {}

    ~MemoryChannel() override {
        // The peer can no longer hear from us; let a blocked recv fail fast.
        out_->close();
        in_->close();
    }

    void send(const Frame& f) override { out_->push(encode_frame(f)); }

    Frame recv(std::chrono::milliseconds timeout) override {
        return decode_frame(in_->pop(timeout));
    }

  private:
    std::shared_ptr<Queue> in_;
    std::shared_ptr<Queue> out_;
};

}  // namespace

std::pair<std::shared_ptr<Channel>, std::shared_ptr<Channel>> pair_memory_channels() {
    auto left_to_right = std::make_shared<Queue>();
    auto right_to_left = std::make_shared<Queue>();
    return {std::make_shared<MemoryChannel>(right_to_left, left_to_right),
            std::make_shared<MemoryChannel>(left_to_right, right_to_left)};
}

}  // namespace psimc::net
