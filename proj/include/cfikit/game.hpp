#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfikit/similarity.hpp"

namespace cfikit {

// Pebbled pair of structures in the invertible-map game over F_2.
struct GameState {
    std::shared_ptr<const CfiStructure> a, b;
    int k = 1;
    int m = 2;
    std::vector<int> peb_a, peb_b;  // per label, -1 when not placed
    std::vector<int> picked;        // labels lifted this round, placed again by Spoiler
    int round = 0;
    bool over = false;
    std::string winner;  // "spoiler" once over
    std::string reason;

    std::vector<int> placed_labels() const;
};

GameState new_game(std::shared_ptr<const CfiStructure> a, std::shared_ptr<const CfiStructure> b, int k, int m,
                   const std::vector<std::pair<int, int>>& initial = {});

// lifts the 2k pebbles with the given labels from both structures
void pick_up(GameState& st, const std::vector<int>& labels);

struct Proposal {
    std::vector<int> free_labels;  // the 2k labels Spoiler will place
    std::shared_ptr<const OrbitPartition> a2k, b2k;
    std::vector<int64_t> f;
    BlockMatrix s;
    nlohmann::json audit = nlohmann::json::object();
};

// The automated Duplicator: align the pebbles, move the twist far away and
// blur it.  Call after pick_up.
Proposal duplicator_round(const GameState& st);

struct RefereeVerdict {
    bool ok = false;
    std::string reason;
    nlohmann::json to_json() const;
};

RefereeVerdict verify_round(const GameState& st, const Proposal& p);

// the pebbled elements define a partial isomorphism
bool partial_isomorphism(const GameState& st, std::string* why = nullptr);

// Places u on A and v on B at the proposal's free labels.  Returns the
// partial-isomorphism verdict; a false verdict ends the game.
bool spoiler_move(GameState& st, const Proposal& p, size_t block, const Tuple& u, const Tuple& v);

struct SpoilerPolicy {
    enum class Kind { Random, Exhaustive, Scripted } kind = Kind::Random;
    uint64_t seed = 0;
    int depth = 1;
    nlohmann::json script = nlohmann::json::array();  // [{pickup, u, v}]
    static SpoilerPolicy from_json(const nlohmann::json& j);
};

struct PlayResult {
    bool duplicator_survived = false;
    int rounds_played = 0;
    std::string outcome;
    nlohmann::json transcript;
};

PlayResult play(GameState& st, const SpoilerPolicy& policy, int rounds);

}  // namespace cfikit
