#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "psimc/logic.hpp"
#include "psimc/transcript.hpp"

namespace psimc::privacy {

enum class Level : std::uint8_t { Note, Concession, Violation };

const char* level_name(Level level);

struct Finding {
    std::string rule;
    Level level = Level::Note;
    std::string message;
};

struct LeakageReport {
    std::string protocol;
    net::Role owner = net::Role::A;
    std::vector<Finding> findings;

    std::size_t count(Level level) const;
    bool clean() const { return count(Level::Violation) == 0; }
    nlohmann::json to_json() const;
};

// Structural audit of one party's transcript. Violations are protocol
// breaches (plaintext where only ciphertext may travel, wrong round shape,
// missing padding, private constants as public scalars). Concessions are
// leaks the protocol accepts by design; notes are observations.
LeakageReport audit_transcript(const net::Transcript& t);

// Exact reduced fraction with a non-zero denominator.
struct Rational {
    std::uint64_t num = 0;
    std::uint64_t den = 1;
    bool operator==(const Rational&) const = default;
};

Rational reduced(std::uint64_t num, std::uint64_t den);
std::string to_string(const Rational& r);

// All interpretations over `width` atoms lying strictly closer to the model
// list than `threshold` in Hamming distance.
std::vector<logic::Interpretation> models_below(
    const std::vector<logic::Interpretation>& models, std::uint64_t threshold,
    std::size_t width);

// Chance the keyholder guesses the peer's hidden interpretation once the
// minimum distance is out: every interpretation not strictly closer than the
// revealed minimum remains a candidate.
Rational guess_probability(const std::vector<logic::Interpretation>& own_models,
                           std::uint64_t min_distance, std::size_t width);

// Uniform guess over `candidate_count` equally likely private inputs.
Rational guess_probability_uniform(std::size_t candidate_count);

}  // namespace psimc::privacy
