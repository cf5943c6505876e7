#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

#include <json.hpp>

using nlohmann::json;

namespace {

std::string psimc_bin() {
    const char* p = std::getenv("PSIMC_BIN");
    REQUIRE_MESSAGE(p, "PSIMC_BIN must point at the psimc executable");
    return p;
}

std::string kbs_dir() {
    const char* p = std::getenv("PSIMC_KBS");
    REQUIRE_MESSAGE(p, "PSIMC_KBS must point at the kbs directory");
    return p;
}

std::string kb(const std::string& name) { return kbs_dir() + "/" + name; }

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string temp_path(const std::string& tag) {
    static int counter = 0;
    return "/tmp/psimc_cli_" + std::to_string(getpid()) + "_" + tag + "_" +
           std::to_string(counter++);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// `prefix` may carry environment assignments; the command runs under sh.
RunResult run_cli(const std::string& args, const std::string& prefix = "") {
    RunResult r;
    std::string err_path = temp_path("err");
    std::string cmd = prefix + psimc_bin() + " " + args + " 2>" + err_path;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe);
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = read_file(err_path);
    std::remove(err_path.c_str());
    return r;
}

}  // namespace

// Every command and output below also appears verbatim in README.md; keep the
// two in sync.

TEST_CASE("readme oracle example") {
    auto r = run_cli("oracle --kb-a " + kb("example8_a.kb") + " --kb-b " +
                     kb("example8_b.kb") + " --json");
    CHECK(r.code == 0);
    const std::string expected = R"({
  "kb_a": {
    "contension": 0,
    "drastic": 0,
    "formulas": 2,
    "models": 1
  },
  "kb_b": {
    "contension": 0,
    "drastic": 0,
    "formulas": 2,
    "models": 1
  },
  "min_mismatch": 2,
  "signature": [
    "a",
    "b1",
    "b2"
  ],
  "union": {
    "contension": 1,
    "drastic": 1,
    "formulas": 3,
    "models": 0
  },
  "v": 1
}
)";
    CHECK(r.out == expected);
}

TEST_CASE("readme measure alg2 example") {
    auto r = run_cli("measure --protocol alg2 --kb-a " + kb("example5_a.kb") +
                     " --kb-b " + kb("example5_b.kb") + " --seed 7 --json");
    CHECK(r.code == 0);
    const std::string expected = R"({
  "counters_a": {
    "alg1_subrounds": 0,
    "ciphertexts_seen": 5,
    "decryptions": 1,
    "encryptions": 4,
    "frames_received": 1,
    "frames_sent": 3,
    "he_adds": 0,
    "he_muls": 0,
    "he_pows": 0,
    "he_subs": 0,
    "keygens": 1
  },
  "counters_b": {
    "alg1_subrounds": 0,
    "ciphertexts_seen": 5,
    "decryptions": 0,
    "encryptions": 4,
    "frames_received": 3,
    "frames_sent": 1,
    "he_adds": 0,
    "he_muls": 11,
    "he_pows": 0,
    "he_subs": 4,
    "keygens": 0
  },
  "protocol": "alg2",
  "result": 1,
  "result_b": null,
  "seed": 7,
  "session_id": "d3dfa848ee1d3ffa",
  "symmetric": false,
  "transport": "memory",
  "v": 1
}
)";
    CHECK(r.out == expected);
}

TEST_CASE("readme measure alg2 text example") {
    auto r = run_cli("measure --protocol alg2 --kb-a " + kb("example5_a.kb") +
                     " --kb-b " + kb("example5_b.kb") + " --seed 7");
    CHECK(r.code == 0);
    CHECK(r.out ==
          "protocol: alg2\n"
          "result: 1\n"
          "session: d3dfa848ee1d3ffa\n"
          "he_ops: A=0 B=15\n");
}

TEST_CASE("readme measure alg4 example") {
    auto r = run_cli("measure --protocol alg4 --kb-a " + kb("example8_a.kb") +
                     " --kb-b " + kb("example8_b.kb") + " --seed 7 --json");
    CHECK(r.code == 0);
    const std::string expected = R"({
  "counters_a": {
    "alg1_subrounds": 0,
    "ciphertexts_seen": 28,
    "decryptions": 4,
    "encryptions": 24,
    "frames_received": 1,
    "frames_sent": 10,
    "he_adds": 0,
    "he_muls": 0,
    "he_pows": 0,
    "he_subs": 0,
    "keygens": 1
  },
  "counters_b": {
    "alg1_subrounds": 8,
    "ciphertexts_seen": 28,
    "decryptions": 0,
    "encryptions": 28,
    "frames_received": 10,
    "frames_sent": 1,
    "he_adds": 16,
    "he_muls": 58,
    "he_pows": 4,
    "he_subs": 56,
    "keygens": 0
  },
  "protocol": "alg4",
  "result": 2,
  "result_b": null,
  "seed": 7,
  "session_id": "1387baaa0b9bfdbd",
  "symmetric": false,
  "transport": "memory",
  "v": 1
}
)";
    CHECK(r.out == expected);
}

TEST_CASE("readme audit example") {
    std::string tpath = temp_path("transcript");
    auto m = run_cli("measure --protocol alg3 --kb-a " + kb("example8_a.kb") +
                     " --kb-b " + kb("example8_b.kb") + " --seed 1 --transcript-out " +
                     tpath + " --json");
    REQUIRE(m.code == 0);
    auto text = run_cli("audit " + tpath);
    CHECK(text.code == 0);
    const std::string expected =
        "alg3 owner=A clean\n"
        "  [concession] model-counts: the query count reveals the keyholder's model "
        "count (1) and the reply length the peer's (1)\n"
        "  [concession] distance-multiset: the keyholder decrypted every pairwise "
        "distance, not only the minimum: [2]\n"
        "alg3 owner=B clean\n"
        "  [concession] model-counts: the query count reveals the keyholder's model "
        "count (1) and the reply length the peer's (1)\n"
        "violations: 0\n";
    CHECK(text.out == expected);

    auto a = run_cli("audit " + tpath + " --json");
    CHECK(a.code == 0);
    json j = json::parse(a.out);
    CHECK(j.at("violations") == 0);
    REQUIRE(j.at("reports").size() == 2);
    CHECK(j.at("reports").at(0).at("clean") == true);
    CHECK(j.at("reports").at(0).at("protocol") == "alg3");
    bool saw_multiset = false;
    for (const auto& f : j.at("reports").at(0).at("findings"))
        saw_multiset |= f.at("rule") == "distance-multiset";
    CHECK(saw_multiset);
    std::remove(tpath.c_str());
}

TEST_CASE("readme bench example") {
    auto r = run_cli("bench --protocol alg1 --min-atoms 2 --max-atoms 4 --seed 1");
    CHECK(r.code == 0);
    std::istringstream lines(r.out);
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line ==
          "protocol,atoms,trial,role,result,he_adds,he_subs,he_muls,he_pows,he_ops,"
          "encryptions,decryptions,frames_sent,frames_received,ciphertexts_seen,"
          "alg1_subrounds,wall_us");
    int rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
        // he_ops for role B rows follows the linear closed form.
        std::istringstream cells(line);
        std::string cell;
        std::vector<std::string> row;
        while (std::getline(cells, cell, ',')) row.push_back(cell);
        REQUIRE(row.size() == 17);
        if (row[3] == "B") {
            unsigned atoms = std::stoul(row[1]);
            CHECK(std::stoul(row[9]) == 3 * atoms - 1);
        }
    }
    CHECK(rows == 6);  // three sizes, one trial, two roles
}

TEST_CASE("symmetric mode reports both results") {
    auto r = run_cli("measure --protocol alg2 --kb-a " + kb("example5_a.kb") +
                     " --kb-b " + kb("example5_b.kb") + " --seed 9 --symmetric --json");
    CHECK(r.code == 0);
    json j = json::parse(r.out);
    CHECK(j.at("symmetric") == true);
    CHECK(j.at("result") == 1);
    CHECK(j.at("result_b") == 1);
}

TEST_CASE("tcp loopback session") {
    std::string port_file = temp_path("port");
    std::string listener_cmd = psimc_bin() + " measure --protocol alg2 --transport tcp --role A --listen 127.0.0.1:0 --port-file " +
                               port_file + " --signature a,b --kb-a " + kb("example5_a.kb") +
                               " --seed 5 --json 2>/dev/null";
    FILE* listener = popen(listener_cmd.c_str(), "r");
    REQUIRE(listener);

    // The writer terminates the port with a newline; wait for it so a
    // half-written file is never used.
    std::string port;
    for (int i = 0; i < 100 && port.find('\n') == std::string::npos; ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        port = read_file(port_file);
    }
    REQUIRE(port.find('\n') != std::string::npos);
    while (!port.empty() && (port.back() == '\n' || port.back() == '\r')) port.pop_back();

    auto b = run_cli("measure --protocol alg2 --transport tcp --role B --connect 127.0.0.1:" +
                     port + " --signature a,b --kb-b " + kb("example5_b.kb") +
                     " --seed 5 --json");
    CHECK(b.code == 0);
    json jb = json::parse(b.out);
    CHECK(jb.at("transport") == "tcp");
    CHECK(jb.at("role") == "B");
    CHECK(jb.at("result").is_null());

    std::string a_out;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, listener)) > 0) a_out.append(buf, n);
    int status = pclose(listener);
    REQUIRE(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 0);
    json ja = json::parse(a_out);
    CHECK(ja.at("role") == "A");
    CHECK(ja.at("result") == 1);
    CHECK(ja.at("session_id") == jb.at("session_id"));
    std::remove(port_file.c_str());
}

TEST_CASE("exit code 2 for configuration mistakes") {
    auto unknown = run_cli("measure --protocol alg9 --kb-a " + kb("example5_a.kb") +
                           " --kb-b " + kb("example5_b.kb") + " --seed 1");
    CHECK(unknown.code == 2);
    CHECK(unknown.err.find("error:") != std::string::npos);

    auto no_role = run_cli("measure --protocol alg2 --transport tcp --listen 127.0.0.1:0 --signature a,b --kb-a " +
                           kb("example5_a.kb") + " --seed 1");
    CHECK(no_role.code == 2);

    auto no_sig = run_cli("measure --protocol alg2 --transport tcp --role A --listen 127.0.0.1:0 --kb-a " +
                          kb("example5_a.kb") + " --seed 1");
    CHECK(no_sig.code == 2);

    auto capped = run_cli("measure --protocol alg1 --kb-a " + kb("example8_a.kb") +
                              " --kb-b " + kb("example8_b.kb") + " --seed 1",
                          "PSIMC_MAX_ATOMS=2 ");
    CHECK(capped.code == 2);
}

TEST_CASE("exit code 3 for network failures") {
    auto r = run_cli("measure --protocol alg2 --transport tcp --role B --connect 127.0.0.1:1 --signature a,b --kb-b " +
                     kb("example5_b.kb") + " --seed 1");
    CHECK(r.code == 3);
}

TEST_CASE("exit code 4 for audit violations") {
    std::string tpath = temp_path("tamper");
    auto m = run_cli("measure --protocol alg1 --kb-a " + kb("example5_a.kb") +
                     " --kb-b " + kb("example5_b.kb") + " --seed 2 --transcript-out " + tpath);
    REQUIRE(m.code == 0);
    json doc = json::parse(read_file(tpath));
    for (auto& t : doc.at("transcripts"))
        for (auto& e : t.at("entries"))
            if (e.at("frame").at("kind") == "result") e["frame"]["body"]["value"] = 3;
    std::ofstream(tpath) << doc.dump();
    auto a = run_cli("audit " + tpath + " --json");
    CHECK(a.code == 4);
    json j = json::parse(a.out);
    CHECK(j.at("violations").get<int>() > 0);
    std::remove(tpath.c_str());
}

TEST_CASE("exit code 5 for input mistakes") {
    auto missing = run_cli("oracle --kb-a /nonexistent/kb.kb");
    CHECK(missing.code == 5);
    CHECK(missing.err.find("/nonexistent/kb.kb") != std::string::npos);

    auto inconsistent = run_cli("measure --protocol alg2 --kb-a " + kb("example2_k1.kb") +
                                " --kb-b " + kb("example5_b.kb") + " --seed 1");
    CHECK(inconsistent.code == 5);
    CHECK(inconsistent.err.find("inconsistent") != std::string::npos);

    auto no_seed = run_cli("measure --protocol alg2 --kb-a " + kb("example5_a.kb") +
                           " --kb-b " + kb("example5_b.kb") + " --json");
    CHECK(no_seed.code == 5);
    CHECK(no_seed.err.find("--seed") != std::string::npos);

    auto bad_env = run_cli("oracle --kb-a " + kb("example5_a.kb"), "PSIMC_MAX_ATOMS=abc ");
    CHECK(bad_env.code == 5);

    auto bad_parse = run_cli("audit /nonexistent/transcript.json");
    CHECK(bad_parse.code == 5);
}

TEST_CASE("oracle respects a smaller atom cap") {
    auto r = run_cli("oracle --kb-a " + kb("example8_a.kb"), "PSIMC_MAX_ATOMS=2 ");
    CHECK(r.code == 2);
}
