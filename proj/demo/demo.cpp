// Walks through the two bundled forced-lane-change scenarios.
//
//   1. Batch run of each scenario, printing the advice timeline the driver
//      would see on the instrument cluster.
//   2. The risk graph of the first no-gap cycle as a character map
//      (. blue, + red, # above the hot threshold, > marks the chosen sample).
//   3. A human-driven gap session fed through the same message path the
//      stream endpoint uses: the driver asks for the left lane after 1 s.

#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "riskmaps/riskmaps.hpp"
#include "riskmaps/service.hpp"

using namespace riskmaps;

namespace {

std::string num(double v, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

void print_timeline(const Scenario& sc) {
  const auto trace = run_scenario(sc);
  const auto summary = summarize(sc, trace);
  std::cout << "== " << sc.name << " (" << trace.size() << " cycles, min distances";
  for (const auto& [id, d] : summary["min_distance_m"].items()) std::cout << ' ' << id << '=' << num(d["value"].get<double>(), 2) << 'm';
  std::cout << ")\n";
  for (const auto& a : summary["advice"]) {
    std::cout << "  t=" << num(a["t"].get<double>(), 1) << "s  " << a["speed"].get<std::string>() << '/'
              << a["direction"].get<std::string>() << "  v0=" << num(a["v0"].get<double>(), 2)
              << " v_tar=" << num(a["v_tar"].get<double>(), 1) << '\n';
  }
}

void print_risk_graph(const TraceRecord& r) {
  const ColorScale scale;
  std::cout << "== risk graph at t=" << num(r.time, 1) << "s, columns 0.." << num(kVisualizationHorizon, 0)
            << " s, one row per (lane, end velocity)\n";
  for (std::size_t i = 0; i < r.field.rows.size(); ++i) {
    const auto& row = r.field.rows[i];
    std::string line;
    for (double rate : row.rates_pct) {
      switch (classify_rate(rate, scale)) {
        case RiskColor::Blue: line += '.'; break;
        case RiskColor::Red: line += '+'; break;
        case RiskColor::Hot: line += '#'; break;
      }
    }
    std::cout << (i == r.field.chosen_row ? "> " : "  ") << row.target_lane << ' ' << (row.end_velocity < 10 ? " " : "") << num(row.end_velocity, 0)
              << " m/s |" << line << "|\n";
  }
}

void drive_session() {
  Scenario sc = make_gap_scenario();
  make_human_driven(sc);
  Session session("demo", sc);
  session.attach();
  std::cout << "== human-driven gap session\n";
  std::string last_advice;
  while (!session.finished()) {
    if (session.cycle() == 10) {
      session.apply(parse_inbound(R"({"version":1,"type":"command","accel":0.5,"lane_request":"left"})"));
    }
    session.tick();
    while (auto msg = session.outbox().pop(std::chrono::milliseconds(0))) {
      const auto m = json::parse(*msg);
      if (m["type"] != "state") {
        std::cout << "  [" << m["type"].get<std::string>() << "]\n";
        continue;
      }
      std::string ego_lane;
      for (const auto& v : m["vehicles"]) {
        if (v["ego"].get<bool>()) ego_lane = v["lane"].get<std::string>();
      }
      const std::string advice = m["speed_advice"].get<std::string>() + '/' + m["direction"].get<std::string>();
      if (advice != last_advice) {
        std::cout << "  t=" << num(m["t"].get<double>(), 1) << "s  ego on " << ego_lane << "  " << advice << '\n';
        last_advice = advice;
      }
    }
  }
}

}  // namespace

int main() {
  try {
    print_timeline(make_gap_scenario());
    print_timeline(make_no_gap_scenario());
    print_risk_graph(run_scenario(make_no_gap_scenario()).front());
    drive_session();
  } catch (const Error& e) {
    std::cerr << "demo: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
