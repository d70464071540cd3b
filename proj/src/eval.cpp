#include "storyloop/eval.hpp"

#include <sys/wait.h>

#include <atomic>
#include <cstdio>
#include <json.hpp>
#include <ostream>
#include <set>
#include <thread>

#include "storyloop/clock.hpp"
#include "storyloop/error.hpp"
#include "storyloop/fsutil.hpp"
#include "storyloop/memory_pool.hpp"
#include "storyloop/session.hpp"
#include "storyloop/text.hpp"

namespace storyloop::eval {

namespace fs = std::filesystem;

double pass_at_k(int n, int c, int k) {
  if (c < 0 || n < c || k < 1 || k > n)
    throw Error(Errc::DomainError, "pass@k needs 0 <= c <= n and 1 <= k <= n (n=" + std::to_string(n) +
                                       ", c=" + std::to_string(c) + ", k=" + std::to_string(k) + ")");
  if (n - c < k) return 1.0;
  double none = 1.0;
  for (int i = 0; i < k; ++i) none *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
  return 1.0 - none;
}

double pro_code(std::int64_t code_tokens, std::int64_t input_tokens, std::int64_t output_tokens) {
  if (code_tokens < 0 || input_tokens < 0 || output_tokens < 0)
    throw Error(Errc::DomainError, "token counts must be non-negative");
  const auto total = input_tokens + output_tokens;
  if (total <= 0) throw Error(Errc::DomainError, "no tokens consumed");
  return static_cast<double>(code_tokens) / static_cast<double>(total);
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    if (ch == '"') {
      quoted = true;
      any = true;
    } else if (ch == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += ch;
      any = true;
    }
  }
  if (quoted) throw Error(Errc::InvalidArgument, "unterminated quoted CSV field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char ch : value) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<TaskSpec> parse_tasks(std::string_view csv) {
  auto rows = parse_csv(csv);
  if (rows.empty()) throw Error(Errc::InvalidArgument, "task list is empty");
  int id_col = -1, name_col = -1, desc_col = -1;
  for (int i = 0; i < static_cast<int>(rows[0].size()); ++i) {
    const auto h = text::trim(rows[0][i]);
    if (h == "id") id_col = i;
    if (h == "name") name_col = i;
    if (h == "description") desc_col = i;
  }
  if (id_col < 0 || name_col < 0 || desc_col < 0)
    throw Error(Errc::InvalidArgument, "task list header must name id, name and description");

  std::vector<TaskSpec> tasks;
  std::set<std::string> seen;
  const auto width = static_cast<std::size_t>(std::max({id_col, name_col, desc_col}) + 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() < width) throw Error(Errc::InvalidArgument, "task row " + std::to_string(r) + " is short");
    TaskSpec t{std::string(text::trim(row[id_col])), std::string(text::trim(row[name_col])),
               std::string(text::trim(row[desc_col]))};
    if (t.id.empty() || t.description.empty())
      throw Error(Errc::InvalidArgument, "task row " + std::to_string(r) + " needs an id and a description");
    for (char ch : t.id)
      if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.'))
        throw Error(Errc::InvalidArgument, "task id '" + t.id + "' has characters unfit for a directory name");
    if (!seen.insert(t.id).second) throw Error(Errc::InvalidArgument, "duplicate task id " + t.id);
    tasks.push_back(std::move(t));
  }
  if (tasks.empty()) throw Error(Errc::InvalidArgument, "task list has no rows");
  return tasks;
}

std::vector<TaskSpec> load_tasks(const fs::path& csv) {
  try {
    return parse_tasks(fsutil::read_file(csv));
  } catch (const Error& e) {
    if (e.code() == Errc::NotFound) throw Error(Errc::InvalidArgument, "cannot read task list " + csv.string());
    throw;
  }
}

int RunRecord::failed_samples() const {
  int n_failed = 0;
  for (const auto& s : samples) n_failed += s.ok ? 0 : 1;
  return n_failed;
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char ch : s) {
    if (ch == '\'')
      out += "'\\''";
    else
      out += ch;
  }
  return out + "'";
}

bool run_test_command(const std::string& tmpl, const fs::path& dir) {
  std::string cmd;
  const std::string quoted = shell_quote(fs::absolute(dir).string());
  std::size_t pos = 0;
  for (;;) {
    auto at = tmpl.find("{dir}", pos);
    cmd.append(tmpl, pos, at == std::string::npos ? std::string::npos : at - pos);
    if (at == std::string::npos) break;
    cmd += quoted;
    pos = at + 5;
  }
  const int status = std::system(cmd.c_str());
  return status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0;
}

SampleResult run_sample(const TaskSpec& task, int sample, const BatchEnv& env, const BatchOptions& options) {
  SampleResult r;
  r.sample = sample;
  r.workspace = options.run_dir / task.id / ("sample-" + std::to_string(sample));

  ManualClock manual;
  Clock& clock = env.simulated_clock ? static_cast<Clock&>(manual) : SystemClock::instance();
  try {
    fs::remove_all(r.workspace);
    fs::create_directories(r.workspace);
    memory::MemoryPool pool(r.workspace / "memory_pool.store", clock);
    llm::Gateway gateway(env.provider, env.prices, clock);
    session::ServiceOptions so;
    so.workspace = r.workspace;
    so.generation = env.generation;
    so.similarity_threshold = env.similarity_threshold;
    so.max_scenarios = env.max_scenarios;
    so.max_repairs = env.max_repairs;
    so.id_generator = [] { return std::string("session"); };
    session::SessionService svc(so, gateway, env.prompts, pool, clock);
    const auto id = svc.create_session();

    const double t0 = clock.monotonic_s();
    try {
      svc.submit_requirement(id, task.description);
      const double t1 = clock.monotonic_s();
      r.scenario_phase_s = t1 - t0;
      const scenario::ScenarioDecision confirm[] = {scenario::ScenarioDecision::confirm()};
      svc.decide_scenarios(id, confirm);
      auto ref = svc.generate_prototype(id);
      r.generation_phase_s = clock.monotonic_s() - t1;
      r.artifact_dir = svc.session_dir(id) / ("v" + std::to_string(ref.version));
      const auto files = svc.version_files(id, ref.version);
      for (auto name : prototype::ProjectFiles::kNames) r.code_tokens += gateway.count_tokens(files[name]);
      r.ok = true;
    } catch (const std::exception& e) {
      r.error = e.what();
      if (r.scenario_phase_s == 0.0) r.scenario_phase_s = clock.monotonic_s() - t0;
      else r.generation_phase_s = clock.monotonic_s() - t0 - r.scenario_phase_s;
    }
    r.wall_time_s = r.scenario_phase_s + r.generation_phase_s;
    r.usage = svc.view(id).usage;
    for (const auto& rec : svc.transcript(id)) {
      r.steps.push_back(rec.step);
      r.counted_input_tokens += gateway.count_tokens(rec.prompt);
      r.counted_output_tokens += gateway.count_tokens(rec.completion);
    }
  } catch (const std::exception& e) {
    r.ok = false;
    if (r.error.empty()) r.error = e.what();
  }

  if (options.test_cmd_template) r.passed = r.ok && run_test_command(*options.test_cmd_template, r.artifact_dir);

  nlohmann::json summary{{"task_id", task.id},
                         {"sample", sample},
                         {"ok", r.ok},
                         {"error", r.error},
                         {"passed", r.passed ? nlohmann::json(*r.passed) : nlohmann::json(nullptr)},
                         {"time_s", r.wall_time_s},
                         {"scenario_phase_s", r.scenario_phase_s},
                         {"generation_phase_s", r.generation_phase_s},
                         {"input_tokens", r.usage.input_tokens},
                         {"output_tokens", r.usage.output_tokens},
                         {"cost_pico", r.usage.cost_pico},
                         {"code_tokens", r.code_tokens},
                         {"counted_input_tokens", r.counted_input_tokens},
                         {"counted_output_tokens", r.counted_output_tokens},
                         {"steps", r.steps}};
  try {
    fsutil::write_file_atomic(r.workspace / "summary.json", summary.dump(2) + "\n");
  } catch (const std::exception&) {
  }
  return r;
}

}  // namespace

std::vector<RunRecord> run_batch(const std::vector<TaskSpec>& tasks, const BatchEnv& env,
                                 const BatchOptions& options) {
  if (tasks.empty()) throw Error(Errc::InvalidArgument, "no tasks");
  if (options.samples < 1) throw Error(Errc::InvalidArgument, "samples must be >= 1");
  if (options.jobs < 1) throw Error(Errc::InvalidArgument, "jobs must be >= 1");

  std::vector<RunRecord> records(tasks.size());
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    records[t].task = tasks[t];
    records[t].n = options.samples;
    records[t].samples.resize(static_cast<std::size_t>(options.samples));
  }

  const std::size_t total = tasks.size() * static_cast<std::size_t>(options.samples);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next++; i < total; i = next++) {
      const auto t = i / static_cast<std::size_t>(options.samples);
      const auto s = i % static_cast<std::size_t>(options.samples);
      records[t].samples[s] = run_sample(tasks[t], static_cast<int>(s) + 1, env, options);
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(options.jobs), total);
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < n_threads; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  for (auto& rec : records) {
    if (!options.test_cmd_template) continue;
    int c = 0;
    for (const auto& s : rec.samples) c += (s.passed && *s.passed) ? 1 : 0;
    rec.c = c;
  }
  return records;
}

std::string mean_usd(std::int64_t sum_pico, std::int64_t count) {
  if (count <= 0) throw Error(Errc::DomainError, "mean of zero values");
  // femtodollars, rounded half up
  const auto scaled = static_cast<__int128>(sum_pico) * 1000;
  auto femto = static_cast<std::int64_t>((scaled * 2 + count) / (2 * static_cast<__int128>(count)));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%lld.%015lld", static_cast<long long>(femto / 1'000'000'000'000'000LL),
                static_cast<long long>(femto % 1'000'000'000'000'000LL));
  return buf;
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Per-task cells, kept numerically so the averages row can be derived.
struct Row {
  std::vector<std::optional<double>> pass;
  std::optional<double> pro_code, time_s;
  std::optional<std::int64_t> cost_femto;
  std::optional<double> input_tokens, output_tokens, code_tokens;
};

std::string num(double v) {
  if (v == static_cast<double>(static_cast<std::int64_t>(v))) return std::to_string(static_cast<std::int64_t>(v));
  return fixed(v, 3);
}

std::string femto_usd(std::int64_t femto) { return mean_usd(femto, 1000); }

}  // namespace

void write_report(std::ostream& out, const std::vector<RunRecord>& records, const std::vector<int>& ks,
                  const std::string& tokenizer_name) {
  if (records.empty()) throw Error(Errc::InvalidArgument, "no records to report");

  out << "task_id,name,n,c";
  for (int k : ks) out << ",pass@" << k;
  out << ",Pro_Code,Time(s),Cost($),input_tokens,output_tokens,code_tokens,failed,tokenizer\n";

  std::vector<Row> rows;
  for (const auto& rec : records) {
    Row row;
    for (int k : ks) {
      if (rec.c && k >= 1 && k <= rec.n)
        row.pass.push_back(pass_at_k(rec.n, *rec.c, k));
      else
        row.pass.push_back(std::nullopt);
    }
    double pro = 0, time = 0, in = 0, outp = 0, code = 0;
    std::int64_t cost = 0;
    int ok = 0;
    for (const auto& s : rec.samples) {
      if (!s.ok) continue;
      ++ok;
      pro += pro_code(s.code_tokens, s.counted_input_tokens, s.counted_output_tokens);
      time += s.wall_time_s;
      cost += s.usage.cost_pico;
      in += static_cast<double>(s.usage.input_tokens);
      outp += static_cast<double>(s.usage.output_tokens);
      code += static_cast<double>(s.code_tokens);
    }
    if (ok > 0) {
      row.pro_code = pro / ok;
      row.time_s = time / ok;
      row.cost_femto = static_cast<std::int64_t>((static_cast<__int128>(cost) * 2000 + ok) / (2 * ok));
      row.input_tokens = in / ok;
      row.output_tokens = outp / ok;
      row.code_tokens = code / ok;
    }
    rows.push_back(row);

    out << csv_field(rec.task.id) << ',' << csv_field(rec.task.name) << ',' << rec.n << ','
        << (rec.c ? std::to_string(*rec.c) : "");
    for (const auto& p : row.pass) out << ',' << (p ? fixed(*p, 6) : "");
    out << ',' << (row.pro_code ? fixed(*row.pro_code, 6) : "") << ',' << (row.time_s ? fixed(*row.time_s, 3) : "")
        << ',' << (row.cost_femto ? femto_usd(*row.cost_femto) : "") << ','
        << (row.input_tokens ? num(*row.input_tokens) : "") << ','
        << (row.output_tokens ? num(*row.output_tokens) : "") << ','
        << (row.code_tokens ? num(*row.code_tokens) : "") << ',' << rec.failed_samples() << ','
        << csv_field(tokenizer_name) << '\n';
  }

  const auto mean_of = [&](auto pick) -> std::optional<double> {
    double sum = 0;
    int count = 0;
    for (const auto& r : rows)
      if (auto v = pick(r)) {
        sum += *v;
        ++count;
      }
    if (count == 0) return std::nullopt;
    return sum / count;
  };

  int n_sum = 0, failed = 0;
  std::optional<int> c_sum;
  for (const auto& rec : records) {
    n_sum += rec.n;
    failed += rec.failed_samples();
    if (rec.c) c_sum = c_sum.value_or(0) + *rec.c;
  }
  const auto nrec = static_cast<double>(records.size());
  out << "average,," << num(n_sum / nrec) << ',' << (c_sum ? num(*c_sum / nrec) : "");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    auto p = mean_of([i](const Row& r) { return r.pass[i]; });
    out << ',' << (p ? fixed(*p, 6) : "");
  }
  auto pro = mean_of([](const Row& r) { return r.pro_code; });
  auto time = mean_of([](const Row& r) { return r.time_s; });
  std::int64_t femto_sum = 0, femto_n = 0;
  for (const auto& r : rows)
    if (r.cost_femto) {
      femto_sum += *r.cost_femto;
      ++femto_n;
    }
  std::optional<std::int64_t> cost;
  if (femto_n > 0) cost = (femto_sum * 2 + femto_n) / (2 * femto_n);
  auto in = mean_of([](const Row& r) { return r.input_tokens; });
  auto outp = mean_of([](const Row& r) { return r.output_tokens; });
  auto code = mean_of([](const Row& r) { return r.code_tokens; });
  out << ',' << (pro ? fixed(*pro, 6) : "") << ',' << (time ? fixed(*time, 3) : "") << ','
      << (cost ? femto_usd(*cost) : "") << ',' << (in ? num(*in) : "") << ',' << (outp ? num(*outp) : "") << ','
      << (code ? num(*code) : "") << ',' << failed << ',' << csv_field(tokenizer_name) << '\n';
}

}  // namespace storyloop::eval
