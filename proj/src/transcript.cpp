#include "psimc/transcript.hpp"

#include <chrono>

namespace psimc::net {

nlohmann::json Counters::to_json() const {
    return {
        {"keygens", keygens},
        {"encryptions", encryptions},
        {"decryptions", decryptions},
        {"he_adds", he_adds},
        {"he_subs", he_subs},
        {"he_muls", he_muls},
        {"he_pows", he_pows},
        {"frames_sent", frames_sent},
        {"frames_received", frames_received},
        {"ciphertexts_seen", ciphertexts_seen},
        {"alg1_subrounds", alg1_subrounds},
    };
}

Counters Counters::from_json(const nlohmann::json& j) {
    Counters c;
    c.keygens = j.at("keygens").get<std::uint64_t>();
    c.encryptions = j.at("encryptions").get<std::uint64_t>();
    c.decryptions = j.at("decryptions").get<std::uint64_t>();
    c.he_adds = j.at("he_adds").get<std::uint64_t>();
    c.he_subs = j.at("he_subs").get<std::uint64_t>();
    c.he_muls = j.at("he_muls").get<std::uint64_t>();
    c.he_pows = j.at("he_pows").get<std::uint64_t>();
    c.frames_sent = j.at("frames_sent").get<std::uint64_t>();
    c.frames_received = j.at("frames_received").get<std::uint64_t>();
    c.ciphertexts_seen = j.at("ciphertexts_seen").get<std::uint64_t>();
    c.alg1_subrounds = j.at("alg1_subrounds").get<std::uint64_t>();
    return c;
}

namespace {

nlohmann::json frame_to_json(const Frame& f) {
    return {
        {"v", f.version}, {"seq", f.seq}, {"from", role_name(f.from)},
        {"kind", f.kind}, {"body", f.body},
    };
}

Frame frame_from_json(const nlohmann::json& j) {
    Frame f;
    f.version = j.at("v").get<int>();
    f.seq = j.at("seq").get<std::uint64_t>();
    f.from = parse_role(j.at("from").get<std::string>());
    f.kind = j.at("kind").get<std::string>();
    f.body = j.at("body");
    return f;
}

std::int64_t now_us() {
    return std::chrono::duration_cast<std::chrono::microseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

}  // namespace

nlohmann::json Transcript::to_json() const {
    nlohmann::json entries_json = nlohmann::json::array();
    for (const auto& e : entries) {
        entries_json.push_back({
            {"dir", e.dir == TranscriptEntry::Dir::Send ? "send" : "recv"},
            {"ts_us", e.timestamp_us},
            {"frame", frame_to_json(e.frame)},
        });
    }
    nlohmann::json obs_json = nlohmann::json::array();
    for (const auto& o : observations)
        obs_json.push_back({{"label", o.label}, {"value", o.value}});
    return {
        {"v", 1},
        {"session_id", session_id},
        {"protocol", protocol},
        {"owner", role_name(owner)},
        {"entries", entries_json},
        {"counters", counters.to_json()},
        {"observations", obs_json},
    };
}

Transcript Transcript::from_json(const nlohmann::json& j) {
    if (j.at("v").get<int>() != 1) throw ProtocolError("unsupported transcript version");
    Transcript t;
    t.session_id = j.at("session_id").get<std::string>();
    t.protocol = j.at("protocol").get<std::string>();
    t.owner = parse_role(j.at("owner").get<std::string>());
    for (const auto& e : j.at("entries")) {
        TranscriptEntry entry;
        std::string dir = e.at("dir").get<std::string>();
        if (dir == "send")
            entry.dir = TranscriptEntry::Dir::Send;
        else if (dir == "recv")
            entry.dir = TranscriptEntry::Dir::Recv;
        else
            throw ProtocolError("bad transcript entry direction '" + dir + "'");
        entry.timestamp_us = e.at("ts_us").get<std::int64_t>();
        entry.frame = frame_from_json(e.at("frame"));
        t.entries.push_back(std::move(entry));
    }
    t.counters = Counters::from_json(j.at("counters"));
    for (const auto& o : j.at("observations"))
        t.observations.push_back(
            {o.at("label").get<std::string>(), o.at("value").get<std::uint64_t>()});
    return t;
}

bool Transcript::same_frames(const Transcript& other) const {
    if (entries.size() != other.entries.size()) return false;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].dir != other.entries[i].dir) return false;
        if (!(entries[i].frame == other.entries[i].frame)) return false;
    }
    return true;
}

std::size_t ciphertexts_in(const Frame& f) {
    if (f.kind == kind::kCt) return 1;
    if (f.kind == kind::kCtVector || f.kind == kind::kCtList) {
        auto it = f.body.find("cts");
        if (it != f.body.end() && it->is_array()) return it->size();
    }
    return 0;
}

void record(Transcript& t, TranscriptEntry::Dir dir, const Frame& f) {
    t.entries.push_back({dir, f, now_us()});
    if (dir == TranscriptEntry::Dir::Send)
        ++t.counters.frames_sent;
    else
        ++t.counters.frames_received;
    t.counters.ciphertexts_seen += ciphertexts_in(f);
}

void FramedPeer::send(const std::string& kind, nlohmann::json body) {
    Frame f;
    f.seq = next_send_seq_++;
    f.from = self_;
    f.kind = kind;
    f.body = std::move(body);
    channel_->send(f);
    record(*transcript_, TranscriptEntry::Dir::Send, f);
}

Frame FramedPeer::recv_any(std::chrono::milliseconds timeout) {
    Frame f = channel_->recv(timeout);
    record(*transcript_, TranscriptEntry::Dir::Recv, f);
    if (f.from != other(self_))
        throw ProtocolError("frame claims to be from " + std::string(role_name(f.from)) +
                            ", expected " + role_name(other(self_)));
    if (f.seq != next_recv_seq_)
        throw ProtocolError("frame sequence gap: got " + std::to_string(f.seq) +
                            ", expected " + std::to_string(next_recv_seq_));
    ++next_recv_seq_;
    if (f.kind == kind::kAbort) {
        std::string reason = f.body.value("reason", std::string("unspecified"));
        throw ProtocolError("peer aborted: " + reason);
    }
    return f;
}

Frame FramedPeer::expect(const std::string& kind, std::chrono::milliseconds timeout) {
    Frame f = recv_any(timeout);
    if (f.kind != kind)
        throw ProtocolError("expected " + kind + " frame, got " + f.kind);
    return f;
}

void FramedPeer::abort(const std::string& reason) {
    Frame f;
    f.seq = next_send_seq_++;
    f.from = self_;
    f.kind = kind::kAbort;
    f.body = {{"reason", reason}};
    channel_->send(f);
    record(*transcript_, TranscriptEntry::Dir::Send, f);
}

}  // namespace psimc::net
