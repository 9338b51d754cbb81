#include "mitra/session.hpp"

#include <cstdio>
#include <random>

namespace mitra {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string random_session_id() {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  return buf;
}

bool blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

void touch(Session& s, Timestamp now) { s.last_active = std::max(s.last_active, now); }

}  // namespace

std::string_view state_name(const SessionState& state) {
  return std::visit(overloaded{[](const FreshState&) { return std::string_view("fresh"); },
                               [](const CandidateProposedState&) {
                                 return std::string_view("candidate_proposed");
                               },
                               [](const LockedState&) { return std::string_view("locked"); }},
                    state);
}

std::string excerpt(std::string_view text, std::size_t max_chars) {
  std::size_t points = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0) == 0x80) continue;
    if (points == max_chars) return std::string(text.substr(0, i)) + "...";
    ++points;
  }
  return std::string(text);
}

Session create_session(Timestamp now) {
  return Session{random_session_id(), FreshState{}, now, now};
}

QueryOutcome handle_query(Session& session, std::string_view query_text, const KnowledgeBase& kb,
                          const RagPipeline& pipeline, Timestamp now,
                          const SessionOptions& options) {
  if (blank(query_text)) throw Error(ErrorCode::EmptyQuery, "query text is empty");

  return std::visit(
      overloaded{
          [&](const FreshState&) -> QueryOutcome {
            if (kb.indexes.abstracts.empty()) {
              throw Error(ErrorCode::EmptyCorpus, "no analyses are indexed");
            }
            const auto qvec = pipeline.models().embedder->embed(query_text, EmbedRole::Query);
            const auto hits =
                kb.indexes.abstracts.search_topk(qvec, std::max<std::size_t>(1, options.alternatives));
            const auto& top = hits.front();
            const AnalysisRecord* record = kb.corpus.find_analysis(top.chunk_id);
            if (!record) {
              throw Error(ErrorCode::UnknownAnalysis, "abstracts index refers to missing analysis " +
                                                          top.chunk_id);
            }
            ConfirmationRequest request{record->analysis_id, record->title,
                                        excerpt(record->abstract_text, options.excerpt_chars),
                                        top.score, {}};
            for (const auto& h : hits) {
              const auto* alt = kb.corpus.find_analysis(h.chunk_id);
              request.alternatives.push_back({h.chunk_id, alt ? alt->title : std::string{}, h.score});
            }
            session.state = CandidateProposedState{record->analysis_id, top.score};
            touch(session, now);
            return request;
          },
          [&](const CandidateProposedState& s) -> QueryOutcome {
            throw Error(ErrorCode::QueryBeforeConfirmation,
                        "analysis " + s.analysis_id + " is awaiting confirmation");
          },
          [&](const LockedState& s) -> QueryOutcome {
            auto answer = pipeline.answer(kb, s.analysis_id, query_text);
            touch(session, now);
            return AnswerOutcome{std::move(answer.text), std::move(answer.citations)};
          }},
      session.state);
}

void confirm(Session& session, bool accept, Timestamp now) {
  const auto* proposed = std::get_if<CandidateProposedState>(&session.state);
  if (!proposed) {
    throw Error(ErrorCode::NotAwaitingConfirmation,
                "session is " + std::string(state_name(session.state)) + ", not awaiting confirmation");
  }
  if (accept) {
    session.state = LockedState{proposed->analysis_id};
  } else {
    session.state = FreshState{};
  }
  touch(session, now);
}

void reset(Session& session, Timestamp now) {
  session.state = FreshState{};
  touch(session, now);
}

SessionManager::SessionManager(std::chrono::seconds idle_expiry, ClockFn clock)
    : idle_expiry_(idle_expiry), clock_(std::move(clock)) {}

Session SessionManager::create() {
  auto entry = std::make_shared<Entry>();
  std::unique_lock lock(mu_);
  do {
    entry->session = create_session(clock_());
  } while (sessions_.contains(entry->session.session_id));
  sessions_.emplace(entry->session.session_id, entry);
  return entry->session;
}

std::shared_ptr<SessionManager::Entry> SessionManager::find(std::string_view session_id) const {
  std::shared_lock lock(mu_);
  auto it = sessions_.find(std::string(session_id));
  if (it == sessions_.end()) {
    throw Error(ErrorCode::UnknownSession, "no session " + std::string(session_id));
  }
  return it->second;
}

Session SessionManager::snapshot(std::string_view session_id) {
  return with_session(session_id, [](Session& s, Timestamp) { return s; });
}

std::size_t SessionManager::evict_idle() {
  const auto now = clock_();
  std::unique_lock lock(mu_);
  return std::erase_if(sessions_, [&](const auto& kv) {
    std::unique_lock entry_lock(kv.second->mu, std::try_to_lock);
    if (!entry_lock.owns_lock()) return false;  // busy means active
    return now - kv.second->session.last_active > idle_expiry_;
  });
}

std::size_t SessionManager::size() const {
  std::shared_lock lock(mu_);
  return sessions_.size();
}

}  // namespace mitra
