#pragma once

// Two-tier conversation state machine.
//
//   Fresh --first query--> CandidateProposed --accept--> Locked
//                                  |--reject--> Fresh
//   any --reset--> Fresh
//
// Full-text retrieval happens only in Locked, and only against the locked
// analysis. Illegal calls throw without touching the session.

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "mitra/error.hpp"
#include "mitra/pipeline.hpp"

namespace mitra {

using Clock = std::chrono::system_clock;
using Timestamp = Clock::time_point;

struct FreshState {
  bool operator==(const FreshState&) const = default;
};
struct CandidateProposedState {
  std::string analysis_id;
  double abstract_score = 0.0;
  bool operator==(const CandidateProposedState&) const = default;
};
struct LockedState {
  std::string analysis_id;
  bool operator==(const LockedState&) const = default;
};

using SessionState = std::variant<FreshState, CandidateProposedState, LockedState>;

std::string_view state_name(const SessionState& state);

struct Session {
  std::string session_id;
  SessionState state = FreshState{};
  Timestamp created_at;
  Timestamp last_active;
};

struct CandidateSummary {
  std::string analysis_id;
  std::string title;
  double score = 0.0;
};

struct ConfirmationRequest {
  std::string analysis_id;
  std::string title;
  std::string abstract_excerpt;
  double score = 0.0;
  // Runner-up matches for display; the state machine confirms only the top one.
  std::vector<CandidateSummary> alternatives;
};

struct AnswerOutcome {
  std::string text;
  std::vector<Citation> citations;
};

struct RejectedOutcome {
  std::string message;
};

using QueryOutcome = std::variant<ConfirmationRequest, AnswerOutcome, RejectedOutcome>;

struct SessionOptions {
  std::size_t alternatives = 3;  // including the proposed candidate
  std::size_t excerpt_chars = 300;
};

Session create_session(Timestamp now = Clock::now());

/// Throws EmptyQuery, QueryBeforeConfirmation, EmptyCorpus, or whatever the
/// model boundary raises; the session is unchanged on any error.
QueryOutcome handle_query(Session& session, std::string_view query_text, const KnowledgeBase& kb,
                          const RagPipeline& pipeline, Timestamp now = Clock::now(),
                          const SessionOptions& options = {});

/// Throws NotAwaitingConfirmation unless the session is CandidateProposed.
void confirm(Session& session, bool accept, Timestamp now = Clock::now());

void reset(Session& session, Timestamp now = Clock::now());

/// First `max_chars` code points of `text`, with "..." appended when cut.
std::string excerpt(std::string_view text, std::size_t max_chars);

/// Concurrent session table. Operations on one session are serialized;
/// distinct sessions proceed independently.
class SessionManager {
 public:
  using ClockFn = std::function<Timestamp()>;

  explicit SessionManager(std::chrono::seconds idle_expiry = std::chrono::hours(24),
                          ClockFn clock = [] { return Clock::now(); });

  Session create();

  /// Runs fn(Session&, Timestamp now) while holding the session's lock.
  /// Throws UnknownSession.
  template <typename Fn>
  decltype(auto) with_session(std::string_view session_id, Fn&& fn) {
    auto entry = find(session_id);
    std::lock_guard lock(entry->mu);
    return std::forward<Fn>(fn)(entry->session, clock_());
  }

  Session snapshot(std::string_view session_id);

  /// Drops sessions idle longer than the expiry; returns how many.
  std::size_t evict_idle();

  std::size_t size() const;

 private:
  struct Entry {
    std::mutex mu;
    Session session;
  };

  std::shared_ptr<Entry> find(std::string_view session_id) const;

  std::chrono::seconds idle_expiry_;
  ClockFn clock_;
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, std::shared_ptr<Entry>> sessions_;
};

}  // namespace mitra
