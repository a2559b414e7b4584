#pragma once

#include <map>
#include <set>

#include "magic/core.hpp"

namespace magic::engine {

struct VoteResult {
    std::map<PlayerId, int> tally;
    std::set<PlayerId> top;
    bool is_tie = false;

    bool operator==(const VoteResult&) const = default;
};

// Plurality tally with tie detection. Self-votes are rejected (they are
// filtered at parse time too, this is the backstop).
VoteResult tally_votes(const std::map<PlayerId, PlayerId>& votes);

} // namespace magic::engine
