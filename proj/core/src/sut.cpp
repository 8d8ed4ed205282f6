#include "mrdebug/sut.hpp"

#include <atomic>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include "mrdebug/errors.hpp"

extern char** environ;

namespace mrdebug {

std::string_view to_string(SutFailure::Kind kind) {
  switch (kind) {
    case SutFailure::Kind::exit_code: return "exit_code";
    case SutFailure::Kind::timeout: return "timeout";
    case SutFailure::Kind::no_match: return "no_match";
    case SutFailure::Kind::parse_error: return "parse_error";
    case SutFailure::Kind::spawn_error: return "spawn_error";
    case SutFailure::Kind::io_error: return "io_error";
  }
  return "unknown";
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  while (!text.empty()) {
    const auto nl = text.find('\n');
    fn(text.substr(0, nl));
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SutFailure(SutFailure::Kind::io_error, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string substitute(std::string arg, const std::map<std::string, std::string>& vars) {
  for (const auto& [key, value] : vars) {
    for (auto at = arg.find(key); at != std::string::npos; at = arg.find(key, at + value.size())) {
      arg.replace(at, key.size(), value);
    }
  }
  return arg;
}

struct TempFiles {
  std::filesystem::path in, out, trace;
  TempFiles() {
    static std::atomic<unsigned long> counter{0};
    const auto base = std::filesystem::temp_directory_path() /
                      ("mrdebug-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    in = base.string() + ".in";
    out = base.string() + ".out";
    trace = base.string() + ".trace";
  }
  ~TempFiles() {
    std::error_code ec;
    for (const auto* p : {&in, &out, &trace}) std::filesystem::remove(*p, ec);
  }
};

int run_with_timeout(const std::string& command, const std::vector<std::string>& args,
                     const std::optional<std::filesystem::path>& stdout_path, double timeout) {
  std::vector<std::string> argv_storage;
  argv_storage.push_back(command);
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  argv.push_back(nullptr);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 0, "/dev/null", O_RDONLY, 0);
  if (stdout_path) {
    posix_spawn_file_actions_addopen(&actions, 1, stdout_path->c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  } else {
    posix_spawn_file_actions_addopen(&actions, 1, "/dev/null", O_WRONLY, 0);
  }
  posix_spawn_file_actions_addopen(&actions, 2, "/dev/null", O_WRONLY, 0);
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);

  pid_t pid = 0;
  const int rc = posix_spawnp(&pid, command.c_str(), &actions, &attr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  if (rc != 0) {
    throw SutFailure(SutFailure::Kind::spawn_error, "cannot spawn " + command + ": " + std::strerror(rc));
  }

  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout);
  auto pause = std::chrono::microseconds(100);
  int status = 0;
  for (;;) {
    const pid_t done = ::waitpid(pid, &status, WNOHANG);
    if (done == pid) break;
    if (done < 0 && errno != EINTR) {
      throw SutFailure(SutFailure::Kind::spawn_error, "waitpid failed for " + command);
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      throw SutFailure(SutFailure::Kind::timeout, command + " exceeded " + std::to_string(timeout) + " s");
    }
    std::this_thread::sleep_for(pause);
    pause = std::min(pause * 2, std::chrono::microseconds(5000));
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

// The regex engine works on bytes, so U+2212 (a three-byte sequence) is
// folded to '-' in both the pattern and the text.
std::string fold_minus(std::string_view s) {
  static constexpr std::string_view kMinus = "\xE2\x88\x92";
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (s.substr(i, kMinus.size()) == kMinus) {
      out += '-';
      i += kMinus.size();
    } else {
      out += s[i++];
    }
  }
  return out;
}

}  // namespace

std::string write_exchange(const Record& record) {
  const Schema& schema = *record.schema();
  std::string out;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& v = record.at(i);
    if (!v) continue;
    out += schema.field(i).name;
    out += " = ";
    out += to_string(*v);
    out += '\n';
  }
  return out;
}

Record read_exchange(const SchemaPtr& schema, std::string_view text) {
  Record record(schema);
  for_each_line(text, [&](std::string_view line) {
    line = trim(line);
    if (line.empty() || line.front() == '#') return;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ValidationError("malformed exchange line: " + std::string(line));
    const std::string label(trim(line.substr(0, eq)));
    const std::string_view raw = trim(line.substr(eq + 1));
    const auto index = schema->index_of(label);
    if (!index) throw ValidationError("unknown label " + label);
    const FieldSpec& field = schema->field(*index);
    Value value;
    if (field.is_numeric()) {
      auto d = Decimal::try_parse(raw);
      if (!d) throw ValidationError("malformed number for " + label + ": " + std::string(raw));
      value = *d;
    } else if (field.is_boolean()) {
      if (raw != "true" && raw != "false") throw ValidationError("malformed boolean for " + label);
      value = raw == "true";
    } else {
      value = EnumTag{std::string(raw)};
    }
    record = record.with(*index, std::move(value));
  });
  return record;
}

std::string write_trace(const std::vector<TraceFeature>& trace) {
  std::string out;
  for (const auto& f : trace) out += f.name + " = " + f.value.to_string() + "\n";
  return out;
}

std::vector<TraceFeature> read_trace(std::string_view text) {
  std::vector<TraceFeature> out;
  for_each_line(text, [&](std::string_view line) {
    line = trim(line);
    if (line.empty()) return;
    const auto eq = line.find(" = ");
    if (eq == std::string_view::npos) return;
    if (auto d = Decimal::try_parse(trim(line.substr(eq + 3)))) {
      out.push_back({std::string(trim(line.substr(0, eq))), *d});
    }
  });
  return out;
}

void ExternalSutConfig::validate() const {
  if (command.empty()) throw SpecError("external SUT needs a command");
  if (timeout <= 0) throw SpecError("external SUT timeout must be positive");
  try {
    const std::regex re(fold_minus(extract_pattern));
    if (re.mark_count() != 1) {
      throw SpecError("extract_pattern must have exactly one capture group, has " +
                      std::to_string(re.mark_count()));
    }
  } catch (const std::regex_error& e) {
    throw SpecError("extract_pattern does not compile: " + std::string(e.what()));
  }
}

Decimal extract_value(std::string_view output_text, const std::string& pattern) {
  const std::regex re(fold_minus(pattern));
  const std::string folded = fold_minus(output_text);
  output_text = folded;
  std::optional<std::string> captured;
  for_each_line(output_text, [&](std::string_view line) {
    if (captured) return;
    std::match_results<std::string_view::const_iterator> m;
    if (std::regex_search(line.begin(), line.end(), m, re)) captured = m[1].str();
  });
  if (!captured) throw SutFailure(SutFailure::Kind::no_match, "no line matches " + pattern);
  auto d = Decimal::try_parse(trim(*captured));
  if (!d) throw SutFailure(SutFailure::Kind::parse_error, "cannot parse '" + *captured + "' as a decimal");
  return *d;
}

Output spawn_external(const ExternalSutConfig& config, const Record& record) {
  const auto started = std::chrono::steady_clock::now();
  TempFiles files;
  {
    std::ofstream in(files.in, std::ios::binary);
    if (!in) throw SutFailure(SutFailure::Kind::io_error, "cannot write " + files.in.string());
    in << write_exchange(record);
  }
  const std::map<std::string, std::string> vars{
      {"{infile}", files.in.string()}, {"{outfile}", files.out.string()}, {"{tracefile}", files.trace.string()}};
  bool out_placeholder = false;
  bool trace_placeholder = false;
  std::vector<std::string> args;
  for (const auto& a : config.args) {
    out_placeholder |= a.find("{outfile}") != std::string::npos;
    trace_placeholder |= a.find("{tracefile}") != std::string::npos;
    args.push_back(substitute(a, vars));
  }
  const int status = run_with_timeout(config.command, args,
                                      out_placeholder ? std::nullopt : std::optional(files.out),
                                      config.timeout);
  if (status != 0) {
    throw SutFailure(SutFailure::Kind::exit_code, config.command + " exited with status " + std::to_string(status));
  }
  Output out;
  out.value = extract_value(read_file(files.out), config.extract_pattern);
  if (trace_placeholder && std::filesystem::exists(files.trace)) out.trace = read_trace(read_file(files.trace));
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

ExternalSut::ExternalSut(ExternalSutConfig config) : config_(std::move(config)) { config_.validate(); }

std::optional<Discrepancy> differential_check(const Sut& ground, const Sut& target,
                                              const Record& record, Decimal epsilon) {
  if (ground.boolean_output() || target.boolean_output()) epsilon = Decimal{};
  Discrepancy d;
  try {
    d.ground = ground.evaluate(record);
  } catch (const SutFailure& e) {
    d.kind = Discrepancy::Kind::crash;
    d.message = "ground: " + std::string(e.what());
  }
  try {
    d.target = target.evaluate(record);
  } catch (const SutFailure& e) {
    d.kind = Discrepancy::Kind::crash;
    if (!d.message.empty()) d.message += "; ";
    d.message += "target: " + std::string(e.what());
  }
  if (d.kind == Discrepancy::Kind::crash) return d;
  d.difference = abs(d.ground->value - d.target->value);
  if (d.difference <= epsilon) return std::nullopt;
  return d;
}

}  // namespace mrdebug
