#pragma once

#include <stdexcept>
#include <string>

namespace magic {

// Error codes used across the library. Tests match on these rather than
// on message text.
enum class Errc {
    MissingField,
    InvalidField,
    PositionOutOfRange,
    NonPositiveMultiplier,
    WrongDescriptionCount,
    UnknownViewer,
    SelfVote,
    UnknownTarget,
    CodeOutOfRange,
    MissingGuess,
    WrongPlayerCount,
    Overdraft,
    VoteForMissingProposal,
    Ambiguous,
    NoMatch,
    NegativeAmount,
    UnparseableAnalysis,
    AgentFailure,
    GatewayTimeout,
    FixtureMiss,
    AuthError,
    RateLimited,
    IncompleteTranscript,
    EmptyOutcomeList,
    MissingRole,
    ConfigError,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

} // namespace magic
