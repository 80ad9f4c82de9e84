#pragma once

#include <chrono>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tooldag/scorers.hpp"

namespace tooldag {

// Newline-delimited JSON. One request per line:
//   {"stage": 2|3|4, "intent": "...", "payload": "<level text>", "budget": "O(n)"}
// plus optional "goal" (signature text), "facts" (list) and "effect", which
// the bundled server needs to reproduce the local checks.
// Replies: {"score": x} for stages 2 and 4, {"idx": 0, "verdict":
// "compatible"|"incompatible", "reason": "..."} for stage 3.
struct ScorerRequest {
  int stage = 2;
  std::string intent;
  std::string payload;
  std::optional<std::string> budget;
  std::optional<std::string> goal;
  std::vector<std::string> facts;
  std::string effect;
};

std::string encode_request(const ScorerRequest& request);
// Throws ScorerFailure.
ScorerRequest decode_request(const std::string& line);

ScorerRequest make_request(int stage, const SubGoal& goal, const ToolRecord& record);

// Reply parsers; anything off-schema throws ScorerFailure.
double decode_score(const std::string& line);
SpecVerdict decode_verdict(const std::string& line);

// One request line out, one reply line back.
class ScorerTransport {
 public:
  virtual ~ScorerTransport() = default;
  // Throws ScorerFailure on timeout or a closed stream.
  virtual std::string exchange(const std::string& line) = 0;
};

// Runs a server in-process; for tests and for wiring a custom judge.
class FunctionTransport final : public ScorerTransport {
 public:
  explicit FunctionTransport(std::function<std::string(const std::string&)> fn) : fn_(std::move(fn)) {}
  std::string exchange(const std::string& line) override { return fn_(line); }

 private:
  std::function<std::string(const std::string&)> fn_;
};

// Child process speaking the protocol on stdin/stdout.
class PipeTransport final : public ScorerTransport {
 public:
  PipeTransport(std::vector<std::string> argv, std::chrono::milliseconds timeout);
  ~PipeTransport() override;
  PipeTransport(const PipeTransport&) = delete;
  PipeTransport& operator=(const PipeTransport&) = delete;

  std::string exchange(const std::string& line) override;

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::chrono::milliseconds timeout_;
  std::string pending_;
};

// Requests are serialized per transport.
Scorers remote_scorers(std::shared_ptr<ScorerTransport> transport);

// Reply to one request line using the deterministic scorers. Malformed
// requests get {"error": "..."}.
std::string serve_line(const std::string& line, const SubtypeLattice& lattice,
                       const SpecCheckOptions& options = {});
// Loop until end of input. Returns the number of requests served.
std::size_t serve_scorer(std::istream& in, std::ostream& out, const SubtypeLattice& lattice,
                         const SpecCheckOptions& options = {});

}  // namespace tooldag
