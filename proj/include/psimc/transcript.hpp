#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "psimc/channel.hpp"
#include "psimc/frame.hpp"

namespace psimc::net {

struct Counters {
    std::uint64_t keygens = 0;
    std::uint64_t encryptions = 0;
    std::uint64_t decryptions = 0;
    std::uint64_t he_adds = 0;
    std::uint64_t he_subs = 0;
    std::uint64_t he_muls = 0;
    std::uint64_t he_pows = 0;
    std::uint64_t frames_sent = 0;
    std::uint64_t frames_received = 0;
    std::uint64_t ciphertexts_seen = 0;  // carried by sent+received frames
    std::uint64_t alg1_subrounds = 0;    // distance computations by B

    std::uint64_t he_ops() const { return he_adds + he_subs + he_muls + he_pows; }

    nlohmann::json to_json() const;
    static Counters from_json(const nlohmann::json& j);

    bool operator==(const Counters&) const = default;
};

struct TranscriptEntry {
    enum class Dir : std::uint8_t { Send, Recv };
    Dir dir;
    Frame frame;
    std::int64_t timestamp_us;
};

// A value the owning party learned by decrypting during the session.
struct Observation {
    std::string label;
    std::uint64_t value;
};

// One party's view of a session: every frame it sent or received, in order,
// plus its local work counters and decrypted observations.
struct Transcript {
    std::string session_id;
    std::string protocol;
    Role owner = Role::A;
    std::vector<TranscriptEntry> entries;
    Counters counters;
    std::vector<Observation> observations;

    nlohmann::json to_json() const;
    static Transcript from_json(const nlohmann::json& j);

    bool same_frames(const Transcript& other) const;
};

void record(Transcript& t, TranscriptEntry::Dir dir, const Frame& f);

// Counts the ciphertexts a frame carries, by kind.
std::size_t ciphertexts_in(const Frame& f);

// Channel wrapper owned by one party for one session: stamps outgoing
// sequence numbers, validates incoming ones, records both directions into
// the transcript, and keeps the frame counters.
class FramedPeer {
  public:
    FramedPeer(std::shared_ptr<Channel> channel, Role self, Transcript& transcript)
        : channel_(std::move(channel)), self_(self), transcript_(&transcript) {}

    Role self() const { return self_; }
    Transcript& transcript() { return *transcript_; }

    void send(const std::string& kind, nlohmann::json body);

    // Receives, records, and rejects protocol breaches: frames from the
    // wrong sender, sequence gaps, or an unexpected kind. A received abort
    // frame raises ProtocolError with the peer's reason.
    Frame expect(const std::string& kind,
                 std::chrono::milliseconds timeout = kDefaultRecvTimeout);

    // Like expect but lets the caller branch on a small set of kinds.
    Frame recv_any(std::chrono::milliseconds timeout = kDefaultRecvTimeout);

    void abort(const std::string& reason);

  private:
    std::shared_ptr<Channel> channel_;
    Role self_;
    Transcript* transcript_;
    std::uint64_t next_send_seq_ = 0;
    std::uint64_t next_recv_seq_ = 0;
};

}  // namespace psimc::net
