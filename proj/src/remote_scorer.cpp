#include "tooldag/remote_scorer.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <istream>
#include <mutex>
#include <ostream>
#include <json.hpp>

#include "tooldag/error.hpp"

namespace tooldag {

using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& why) { throw Error(Errc::ScorerFailure, why); }

json parse_object(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    fail(std::string("malformed reply: ") + e.what());
  }
  if (!j.is_object()) fail("reply is not an object");
  return j;
}

}  // namespace

std::string encode_request(const ScorerRequest& r) {
  json j = {{"stage", r.stage}, {"intent", r.intent}, {"payload", r.payload}};
  if (r.budget) j["budget"] = *r.budget;
  if (r.goal) j["goal"] = *r.goal;
  if (!r.facts.empty()) j["facts"] = r.facts;
  if (!r.effect.empty()) j["effect"] = r.effect;
  return j.dump();
}

ScorerRequest decode_request(const std::string& line) {
  json j = parse_object(line);
  ScorerRequest r;
  try {
    r.stage = j.at("stage").get<int>();
    r.intent = j.at("intent").get<std::string>();
    r.payload = j.at("payload").get<std::string>();
    if (j.contains("budget")) r.budget = j["budget"].get<std::string>();
    if (j.contains("goal")) r.goal = j["goal"].get<std::string>();
    if (j.contains("facts")) r.facts = j["facts"].get<std::vector<std::string>>();
    if (j.contains("effect")) r.effect = j["effect"].get<std::string>();
  } catch (const json::exception& e) {
    fail(std::string("bad request: ") + e.what());
  }
  if (r.stage < 2 || r.stage > 4) fail("stage must be 2, 3 or 4");
  return r;
}

ScorerRequest make_request(int stage, const SubGoal& goal, const ToolRecord& record) {
  ScorerRequest r;
  r.stage = stage;
  r.intent = goal.intent;
  r.payload = level_text(record, stage);
  if (goal.budget) r.budget = to_string(*goal.budget);
  r.goal = to_string(goal.goal_sig);
  r.facts.assign(goal.available_facts.begin(), goal.available_facts.end());
  r.effect = goal.goal_effect;
  return r;
}

double decode_score(const std::string& line) {
  json j = parse_object(line);
  if (!j.contains("score") || !j["score"].is_number()) fail("reply lacks a numeric score");
  double s = j["score"].get<double>();
  if (!std::isfinite(s) || s < 0 || s > 1) fail("score outside [0, 1]");
  return s;
}

SpecVerdict decode_verdict(const std::string& line) {
  json j = parse_object(line);
  if (!j.contains("idx") || !j["idx"].is_number_integer() || j["idx"].get<long long>() != 0) {
    fail("reply idx must be 0");
  }
  if (!j.contains("verdict") || !j["verdict"].is_string()) fail("reply lacks a verdict");
  if (!j.contains("reason") || !j["reason"].is_string()) fail("reply lacks a reason");
  auto v = j["verdict"].get<std::string>();
  SpecVerdict out;
  if (v == "compatible") {
    out.compatible = true;
  } else if (v == "incompatible") {
    out.compatible = false;
  } else {
    fail("verdict must be compatible or incompatible");
  }
  out.reason = j["reason"].get<std::string>();
  if (!out.compatible && out.reason.empty()) fail("incompatible verdict without a reason");
  return out;
}

// ---- pipe transport ----

PipeTransport::PipeTransport(std::vector<std::string> argv, std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  if (argv.empty()) throw Error(Errc::InvalidArgument, "empty scorer command");
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0) fail("pipe failed");
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    fail("pipe failed");
  }
  pid_ = fork();
  if (pid_ < 0) fail("fork failed");
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    std::vector<char*> args;
    for (auto& a : argv) args.push_back(a.data());
    args.push_back(nullptr);
    execvp(args[0], args.data());
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  // A dead child must surface as an error, not a SIGPIPE.
  signal(SIGPIPE, SIG_IGN);
}

PipeTransport::~PipeTransport() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    kill(pid_, SIGTERM);
    waitpid(pid_, nullptr, 0);
  }
}

std::string PipeTransport::exchange(const std::string& line) {
  std::string out = line + "\n";
  std::size_t sent = 0;
  while (sent < out.size()) {
    auto n = write(to_child_, out.data() + sent, out.size() - sent);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("scorer process closed its input");
    }
    sent += static_cast<std::size_t>(n);
  }
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    auto nl = pending_.find('\n');
    if (nl != std::string::npos) {
      std::string reply = pending_.substr(0, nl);
      pending_.erase(0, nl + 1);
      return reply;
    }
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) fail("scorer timed out");
    pollfd p{from_child_, POLLIN, 0};
    int r = poll(&p, 1, static_cast<int>(left.count()));
    if (r < 0) {
      if (errno == EINTR) continue;
      fail("poll failed");
    }
    if (r == 0) fail("scorer timed out");
    char buf[4096];
    auto n = read(from_child_, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) fail("scorer process closed its output");
    pending_.append(buf, static_cast<std::size_t>(n));
  }
}

// ---- client adapters ----

namespace {

struct Channel {
  std::shared_ptr<ScorerTransport> transport;
  std::mutex mu;

  std::string ask(const ScorerRequest& r) {
    std::lock_guard<std::mutex> lock(mu);
    return transport->exchange(encode_request(r));
  }
};

class RemoteRelevance final : public RelevanceScorer {
 public:
  explicit RemoteRelevance(std::shared_ptr<Channel> c) : c_(std::move(c)) {}
  double score(const SubGoal& goal, const ToolRecord& record) const override {
    return decode_score(c_->ask(make_request(2, goal, record)));
  }

 private:
  std::shared_ptr<Channel> c_;
};

class RemoteSpec final : public SpecChecker {
 public:
  explicit RemoteSpec(std::shared_ptr<Channel> c) : c_(std::move(c)) {}
  SpecVerdict check(const SubGoal& goal, const ToolRecord& record) const override {
    return decode_verdict(c_->ask(make_request(3, goal, record)));
  }

 private:
  std::shared_ptr<Channel> c_;
};

class RemoteExamples final : public ExampleScorer {
 public:
  explicit RemoteExamples(std::shared_ptr<Channel> c) : c_(std::move(c)) {}
  double score(const SubGoal& goal, const ToolRecord& record) const override {
    return decode_score(c_->ask(make_request(4, goal, record)));
  }

 private:
  std::shared_ptr<Channel> c_;
};

}  // namespace

Scorers remote_scorers(std::shared_ptr<ScorerTransport> transport) {
  auto c = std::make_shared<Channel>();
  c->transport = std::move(transport);
  return {std::make_shared<RemoteRelevance>(c), std::make_shared<RemoteSpec>(c),
          std::make_shared<RemoteExamples>(c)};
}

// ---- server ----

std::string serve_line(const std::string& line, const SubtypeLattice& lattice,
                       const SpecCheckOptions& options) {
  try {
    auto r = decode_request(line);
    SubGoal goal;
    goal.intent = r.intent;
    goal.available_facts.insert(r.facts.begin(), r.facts.end());
    goal.goal_effect = r.effect;
    if (r.budget) {
      goal.budget = parse_complexity(*r.budget);
      if (!goal.budget) fail("unknown budget " + *r.budget);
    }
    if (r.goal) goal.goal_sig = parse_signature(*r.goal);

    ToolRecord record;
    switch (r.stage) {
      case 2:
        parse_l2(r.payload, record);
        return json{{"score", lexical_score(goal.intent, record.description, record.tags)}}.dump();
      case 3: {
        parse_l3(r.payload, record);
        auto v = spec_compatible(goal, record.spec, options);
        return json{{"idx", 0},
                    {"verdict", v.compatible ? "compatible" : "incompatible"},
                    {"reason", v.reason}}
            .dump();
      }
      default: {
        if (!r.goal) fail("stage 4 needs the goal signature");
        parse_l4(r.payload, record);
        return json{{"score", example_score(goal, record.examples, lattice)}}.dump();
      }
    }
  } catch (const std::exception& e) {
    return json{{"error", e.what()}}.dump();
  }
}

std::size_t serve_scorer(std::istream& in, std::ostream& out, const SubtypeLattice& lattice,
                         const SpecCheckOptions& options) {
  std::size_t served = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out << serve_line(line, lattice, options) << '\n';
    out.flush();
    ++served;
  }
  return served;
}

}  // namespace tooldag
