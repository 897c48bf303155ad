#include "pod/trace.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pod {

const char* to_string(Category c) {
  switch (c) {
    case Category::I: return "I";
    case Category::BO: return "BO";
    case Category::A: return "A";
    case Category::EO: return "EO";
    case Category::C: return "C";
    case Category::W: return "W";
  }
  return "?";
}

Category category_from_string(const std::string& s) {
  if (s == "I") return Category::I;
  if (s == "BO") return Category::BO;
  if (s == "A") return Category::A;
  if (s == "EO") return Category::EO;
  if (s == "C") return Category::C;
  if (s == "W") return Category::W;
  throw std::invalid_argument("unknown trace category: " + s);
}

void RankCollector::record(Category category, double t_start, double t_end, long round,
                           long particles, long steps, long bundles) {
  if (!enabled_) return;
  if (t_end < t_start)
    throw std::invalid_argument("trace interval ends before it starts");
  if (t_start < last_end_)
    throw std::invalid_argument("trace interval overlaps the previous event on rank " +
                                std::to_string(rank_));
  events_.push_back({rank_, category, t_start, t_end, round, particles, steps, bundles});
  last_end_ = t_end;
}

ParticleStats make_stats(const Particle& p) {
  ParticleStats s;
  s.id = p.id;
  s.status = p.status;
  s.termination_time = p.termination_time;
  s.position = p.position;
  s.np = static_cast<int>(p.visit_history.size());
  s.steps = p.steps_taken;
  s.t_bo = p.t_bo;
  s.t_a = p.t_a;
  s.t_eo = p.t_eo;
  s.t_cw = p.t_cw;
  s.t_c = p.t_c;
  s.accumulated_group_size = p.accumulated_group_size();
  s.history = p.visit_history;
  return s;
}

const ParticleStats& find_slowest_particle(std::span<const ParticleStats> stats) {
  if (stats.empty()) throw std::invalid_argument("no particle stats");
  const ParticleStats* best = &stats[0];
  for (const auto& s : stats) {
    if (s.termination_time > best->termination_time ||
        (s.termination_time == best->termination_time && s.id < best->id))
      best = &s;
  }
  return *best;
}

bool is_two_block_alternation(std::span<const Visit> history, int window) {
  if (window < 2) throw std::invalid_argument("alternation window must be >= 2");
  const std::size_t need = static_cast<std::size_t>(2 * window);
  if (history.size() < need) return false;
  const auto tail = history.subspan(history.size() - need);
  const int a = tail[0].block_id;
  const int b = tail[1].block_id;
  if (a == b) return false;
  for (std::size_t i = 2; i < need; ++i)
    if (tail[i].block_id != (i % 2 == 0 ? a : b)) return false;
  return true;
}

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string encode_history(const std::vector<Visit>& history) {
  std::string out;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (i) out += '|';
    out += std::to_string(history[i].block_id);
    out += ':';
    out += std::to_string(history[i].group_size);
  }
  return out;
}

std::vector<Visit> decode_history(const std::string& text) {
  std::vector<Visit> history;
  if (text.empty()) return history;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, '|')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("malformed visit history: " + text);
    history.push_back(
        {std::stoi(item.substr(0, colon)), std::stoi(item.substr(colon + 1))});
  }
  return history;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_events_jsonl(const RunTrace& trace, const std::filesystem::path& path) {
  auto out = open_out(path);
  nlohmann::ordered_json header{{"type", "header"},
                                {"version", 1},
                                {"mode", trace.mode},
                                {"time_unit", trace.time_unit},
                                {"num_ranks", trace.num_ranks},
                                {"total_time", trace.total_time},
                                {"config_hash", trace.config_hash},
                                {"compat_hash", trace.compat_hash},
                                {"config", trace.config_echo}};
  out << header.dump() << '\n';
  for (const auto& events : trace.rank_events)
    for (const auto& e : events) {
      nlohmann::ordered_json line{
          {"type", "event"},     {"rank", e.rank},   {"cat", to_string(e.category)},
          {"t0", e.t_start},     {"t1", e.t_end},    {"round", e.round},
          {"particles", e.particles}, {"steps", e.steps}, {"bundles", e.bundles}};
      out << line.dump() << '\n';
    }
  for (int r = 0; r < static_cast<int>(trace.rank_counters.size()); ++r) {
    const auto& c = trace.rank_counters[r];
    nlohmann::ordered_json line{{"type", "counters"},
                                {"rank", r},
                                {"rounds", c.rounds},
                                {"processed", c.particles_processed},
                                {"sent", c.particles_sent},
                                {"received", c.particles_received}};
    out << line.dump() << '\n';
  }
  if (trace.tracked) {
    nlohmann::ordered_json records = nlohmann::ordered_json::array();
    for (const auto& r : trace.tracked->records)
      records.push_back({{"rank", r.rank}, {"event", r.event}, {"t", r.time}});
    nlohmann::ordered_json line{
        {"type", "tracked"}, {"id", trace.tracked->id}, {"records", records}};
    out << line.dump() << '\n';
  }
}

void write_particles_csv(const RunTrace& trace, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "# podsim particles v1 config_hash=" << trace.config_hash << '\n';
  out << "id,status,termination_time,x,y,z,np,steps,bo,a,eo,cw,c,acc_group_size,history\n";
  for (const auto& p : trace.particles) {
    out << p.id << ',' << to_string(p.status) << ',' << fmt_double(p.termination_time)
        << ',' << fmt_double(p.position.x) << ',' << fmt_double(p.position.y) << ','
        << fmt_double(p.position.z) << ',' << p.np << ',' << p.steps << ','
        << fmt_double(p.t_bo) << ',' << fmt_double(p.t_a) << ',' << fmt_double(p.t_eo)
        << ',' << fmt_double(p.t_cw) << ',' << fmt_double(p.t_c) << ','
        << p.accumulated_group_size << ',' << encode_history(p.history) << '\n';
  }
}

void serialize(const RunTrace& trace, TraceFormat format,
               const std::filesystem::path& path) {
  if (format == TraceFormat::JSONL)
    write_events_jsonl(trace, path);
  else
    write_particles_csv(trace, path);
}

RunTrace load_trace(const std::filesystem::path& events_path,
                    const std::filesystem::path& particles_path) {
  RunTrace trace;

  std::ifstream in(events_path);
  if (!in) throw std::runtime_error("cannot read " + events_path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::ordered_json::parse(line);
    const std::string type = j.at("type");
    if (type == "header") {
      trace.mode = j.at("mode");
      trace.time_unit = j.at("time_unit");
      trace.num_ranks = j.at("num_ranks");
      trace.total_time = j.at("total_time");
      trace.config_hash = j.at("config_hash");
      trace.compat_hash = j.at("compat_hash");
      trace.config_echo = j.at("config");
      trace.rank_events.resize(trace.num_ranks);
      trace.rank_counters.resize(trace.num_ranks);
    } else if (type == "event") {
      TraceEvent e;
      e.rank = j.at("rank");
      e.category = category_from_string(j.at("cat"));
      e.t_start = j.at("t0");
      e.t_end = j.at("t1");
      e.round = j.at("round");
      e.particles = j.at("particles");
      e.steps = j.at("steps");
      e.bundles = j.at("bundles");
      trace.rank_events.at(e.rank).push_back(e);
    } else if (type == "counters") {
      const int rank = j.at("rank");
      auto& c = trace.rank_counters.at(rank);
      c.rounds = j.at("rounds");
      c.particles_processed = j.at("processed");
      c.particles_sent = j.at("sent");
      c.particles_received = j.at("received");
    } else if (type == "tracked") {
      TrackedParticleLog log;
      log.id = j.at("id");
      for (const auto& r : j.at("records"))
        log.records.push_back({r.at("rank"), r.at("event"), r.at("t")});
      trace.tracked = std::move(log);
    }
  }

  std::ifstream pin(particles_path);
  if (!pin) throw std::runtime_error("cannot read " + particles_path.string());
  while (std::getline(pin, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("id,", 0) == 0) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 14)
      throw std::runtime_error("malformed particle row: " + line);
    ParticleStats p;
    p.id = std::stoll(cells[0]);
    p.status = particle_status_from_string(cells[1]);
    p.termination_time = std::stod(cells[2]);
    p.position = {std::stod(cells[3]), std::stod(cells[4]), std::stod(cells[5])};
    p.np = std::stoi(cells[6]);
    p.steps = std::stoi(cells[7]);
    p.t_bo = std::stod(cells[8]);
    p.t_a = std::stod(cells[9]);
    p.t_eo = std::stod(cells[10]);
    p.t_cw = std::stod(cells[11]);
    p.t_c = std::stod(cells[12]);
    p.accumulated_group_size = std::stol(cells[13]);
    p.history = cells.size() > 14 ? decode_history(cells[14]) : std::vector<Visit>{};
    trace.particles.push_back(std::move(p));
  }
  return trace;
}

}  // namespace pod
