#include <doctest.h>

#include <chrono>
#include <string>
#include <thread>
#include <vector>

#include "psimc/channel.hpp"
#include "psimc/errors.hpp"
#include "psimc/frame.hpp"
#include "psimc/transcript.hpp"

using namespace psimc;
using namespace psimc::net;
using nlohmann::json;

TEST_CASE("role parsing") {
    CHECK(parse_role("A") == Role::A);
    CHECK(parse_role("B") == Role::B);
    CHECK_THROWS_AS(parse_role("C"), ProtocolError);
    CHECK(other(Role::A) == Role::B);
    CHECK(std::string(role_name(Role::B)) == "B");
}

TEST_CASE("frame encode decode round trip") {
    Frame f{1, 42, Role::B, kind::kCt, json{{"ct", "00ff"}}};
    auto bytes = encode_frame(f);
    REQUIRE(bytes.size() > 4);
    // 4-byte big-endian length prefix.
    std::size_t len = (std::size_t(bytes[0]) << 24) | (std::size_t(bytes[1]) << 16) |
                      (std::size_t(bytes[2]) << 8) | std::size_t(bytes[3]);
    CHECK(len == bytes.size() - 4);
    Frame back = decode_frame(bytes);
    CHECK(back == f);
}

TEST_CASE("frame decode rejects garbage") {
    CHECK_THROWS_AS(decode_frame(std::vector<std::uint8_t>{}), ChannelError);
    std::vector<std::uint8_t> short_len{0, 0, 0, 9, '{'};
    CHECK_THROWS_AS(decode_frame(short_len), ChannelError);
    Frame f{1, 0, Role::A, kind::kResult, json{{"status", "done"}}};
    auto good = encode_frame(f);
    auto bad = good;
    bad[5] = 0xfe;  // corrupt the JSON text
    CHECK_THROWS_AS(decode_frame(bad), ProtocolError);
    auto wrong_kind = f;
    wrong_kind.kind = "mystery";
    CHECK_THROWS_AS(encode_frame(wrong_kind), ProtocolError);
}

TEST_CASE("oversize frames are rejected") {
    Frame f{1, 0, Role::A, kind::kCt, json{{"ct", std::string(limits::kMaxFrameBytes, 'a')}}};
    CHECK_THROWS_AS(encode_frame(f), ChannelError);
}

TEST_CASE("memory channel delivers in order") {
    auto [a, b] = pair_memory_channels();
    Frame f1{1, 0, Role::A, kind::kCt, json{{"ct", "aa"}}};
    Frame f2{1, 1, Role::A, kind::kCt, json{{"ct", "bb"}}};
    a->send(f1);
    a->send(f2);
    CHECK(b->recv() == f1);
    CHECK(b->recv() == f2);
}

TEST_CASE("memory channel timeout") {
    auto [a, b] = pair_memory_channels();
    (void)a;
    auto start = std::chrono::steady_clock::now();
    CHECK_THROWS_AS(b->recv(std::chrono::milliseconds(10)), ChannelError);
    auto elapsed = std::chrono::steady_clock::now() - start;
    CHECK(elapsed < std::chrono::seconds(5));
}

TEST_CASE("memory channel closed peer") {
    auto [a, b] = pair_memory_channels();
    a.reset();
    CHECK_THROWS_AS(b->recv(std::chrono::milliseconds(100)), ChannelError);
}

TEST_CASE("tcp channel matches memory behaviour") {
    TcpListener listener("127.0.0.1:0");
    REQUIRE(listener.port() != 0);
    std::shared_ptr<Channel> server;
    std::thread t([&] { server = listener.accept(std::chrono::seconds(5)); });
    auto client = tcp_connect("127.0.0.1:" + std::to_string(listener.port()));
    t.join();
    REQUIRE(server);

    Frame f{1, 0, Role::A, kind::kPubkey, json{{"q", 17}}};
    client->send(f);
    CHECK(server->recv() == f);
    Frame g{1, 0, Role::B, kind::kCt, json{{"ct", "beef"}}};
    server->send(g);
    CHECK(client->recv() == g);
    CHECK_THROWS_AS(client->recv(std::chrono::milliseconds(20)), ChannelError);
}

TEST_CASE("tcp connect failure") {
    CHECK_THROWS_AS(tcp_connect("127.0.0.1:1"), ChannelError);
    CHECK_THROWS_AS(tcp_connect("not-an-address"), ChannelError);
}

TEST_CASE("tcp accept timeout") {
    TcpListener listener("127.0.0.1:0");
    CHECK_THROWS_AS(listener.accept(std::chrono::milliseconds(20)), ChannelError);
}

TEST_CASE("counters json round trip") {
    Counters c;
    c.keygens = 1;
    c.he_adds = 2;
    c.he_subs = 3;
    c.he_muls = 4;
    c.he_pows = 5;
    c.encryptions = 6;
    c.decryptions = 7;
    c.frames_sent = 8;
    c.frames_received = 9;
    c.ciphertexts_seen = 10;
    c.alg1_subrounds = 11;
    CHECK(c.he_ops() == 14);
    CHECK(Counters::from_json(c.to_json()) == c);
}

TEST_CASE("transcript json round trip") {
    Transcript t;
    t.session_id = "cafe";
    t.protocol = "alg2";
    t.owner = Role::B;
    Frame f{1, 0, Role::B, kind::kCt, json{{"ct", "00"}}};
    record(t, TranscriptEntry::Dir::Send, f);
    Frame g{1, 0, Role::A, kind::kResult, json{{"status", "done"}}};
    record(t, TranscriptEntry::Dir::Recv, g);
    t.counters.frames_sent = 1;
    t.counters.frames_received = 1;
    t.observations.push_back({"alg2.result", 1});

    Transcript back = Transcript::from_json(t.to_json());
    CHECK(back.session_id == t.session_id);
    CHECK(back.protocol == t.protocol);
    CHECK(back.owner == t.owner);
    REQUIRE(back.entries.size() == 2);
    CHECK(back.entries[0].frame == f);
    CHECK(back.entries[0].dir == TranscriptEntry::Dir::Send);
    CHECK(back.entries[1].frame == g);
    CHECK(back.counters == t.counters);
    REQUIRE(back.observations.size() == 1);
    CHECK(back.observations[0].label == "alg2.result");
    CHECK(back.observations[0].value == 1);
    CHECK(back.same_frames(t));
}

TEST_CASE("ciphertexts_in counts by kind") {
    CHECK(ciphertexts_in({1, 0, Role::A, kind::kCt, json{{"ct", "00"}}}) == 1);
    CHECK(ciphertexts_in({1, 0, Role::A, kind::kCtVector,
                          json{{"cts", json::array({"00", "11", "22"})}}}) == 3);
    CHECK(ciphertexts_in({1, 0, Role::A, kind::kCtList,
                          json{{"cts", json::array({"00"})}}}) == 1);
    CHECK(ciphertexts_in({1, 0, Role::A, kind::kResult, json{{"status", "done"}}}) == 0);
    CHECK(ciphertexts_in({1, 0, Role::A, kind::kPubkey, json::object()}) == 0);
}

TEST_CASE("framed peer stamps and validates sequence numbers") {
    auto [ca, cb] = pair_memory_channels();
    Transcript ta, tb;
    FramedPeer pa(ca, Role::A, ta);
    FramedPeer pb(cb, Role::B, tb);

    pa.send(kind::kCt, json{{"ct", "01"}});
    pa.send(kind::kCt, json{{"ct", "02"}});
    Frame first = pb.expect(kind::kCt);
    CHECK(first.seq == 0);
    CHECK(first.from == Role::A);
    Frame second = pb.expect(kind::kCt);
    CHECK(second.seq == 1);

    CHECK(ta.counters.frames_sent == 2);
    CHECK(tb.counters.frames_received == 2);
    CHECK(tb.counters.ciphertexts_seen == 2);
    REQUIRE(ta.entries.size() == 2);
    CHECK(ta.entries[0].dir == TranscriptEntry::Dir::Send);

    // Wrong kind.
    pa.send(kind::kCt, json{{"ct", "03"}});
    CHECK_THROWS_AS(pb.expect(kind::kResult), ProtocolError);
}

TEST_CASE("framed peer rejects sequence gaps") {
    auto [ca, cb] = pair_memory_channels();
    Transcript tb;
    FramedPeer pb(cb, Role::B, tb);
    ca->send(Frame{1, 5, Role::A, kind::kCt, json{{"ct", "00"}}});
    CHECK_THROWS_AS(pb.expect(kind::kCt), ProtocolError);
}

TEST_CASE("framed peer rejects frames from the wrong sender") {
    auto [ca, cb] = pair_memory_channels();
    Transcript tb;
    FramedPeer pb(cb, Role::B, tb);
    ca->send(Frame{1, 0, Role::B, kind::kCt, json{{"ct", "00"}}});
    CHECK_THROWS_AS(pb.expect(kind::kCt), ProtocolError);
}

TEST_CASE("abort frame surfaces the peer reason") {
    auto [ca, cb] = pair_memory_channels();
    Transcript ta, tb;
    FramedPeer pa(ca, Role::A, ta);
    FramedPeer pb(cb, Role::B, tb);
    pa.abort("config hash mismatch");
    try {
        pb.expect(kind::kCt);
        FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
        std::string msg = e.what();
        CHECK(msg.find("peer aborted") != std::string::npos);
        CHECK(msg.find("config hash mismatch") != std::string::npos);
    }
}
