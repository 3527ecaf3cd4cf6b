#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "mat/core.hpp"
#include "mat/pipeline.hpp"
#include "mat/track.hpp"

namespace mat::toolkit {

// One line of a MOTChallenge text file: frame,id,x,y,w,h,conf,a,b,c
struct MotRecord {
  FrameIndex frame = 1;
  TrackId id = -1;
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  double confidence = -1.0;
  double a = -1.0;
  double b = -1.0;
  double c = -1.0;

  BoundingBox box() const { return BoundingBox::from_xywh(x, y, w, h); }
};

class ParseError : public InvalidArgument {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : InvalidArgument(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  std::string tmp(s);
  char* end = nullptr;
  out = std::strtod(tmp.c_str(), &end);
  return end == tmp.c_str() + tmp.size() && std::isfinite(out);
}

}  // namespace detail

inline MotRecord parse_record(std::string_view line, const std::string& source, std::size_t line_no) {
  std::vector<double> fields;
  std::size_t start = 0;
  while (start <= line.size()) {
    const std::size_t comma = line.find(',', start);
    const std::string_view tok = line.substr(start, comma == std::string_view::npos ? line.size() - start : comma - start);
    double v = 0.0;
    if (!detail::parse_double(tok, v)) throw ParseError(source, line_no, "non-numeric field '" + std::string(tok) + "'");
    fields.push_back(v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (fields.size() < 7 || fields.size() > 10) {
    throw ParseError(source, line_no, "expected 7 to 10 comma-separated fields, got " + std::to_string(fields.size()));
  }
  MotRecord r;
  r.frame = static_cast<FrameIndex>(fields[0]);
  r.id = static_cast<TrackId>(fields[1]);
  r.x = fields[2];
  r.y = fields[3];
  r.w = fields[4];
  r.h = fields[5];
  r.confidence = fields[6];
  if (fields.size() > 7) r.a = fields[7];
  if (fields.size() > 8) r.b = fields[8];
  if (fields.size() > 9) r.c = fields[9];
  if (r.frame < 1 || static_cast<double>(r.frame) != fields[0]) throw ParseError(source, line_no, "frame must be an integer >= 1");
  if (!(r.w > 0.0) || !(r.h > 0.0)) throw ParseError(source, line_no, "width and height must be positive");
  return r;
}

inline std::vector<MotRecord> read_records(std::istream& in, const std::string& source) {
  std::vector<MotRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    out.push_back(parse_record(line, source, line_no));
  }
  return out;
}

inline std::vector<MotRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return read_records(in, path.string());
}

// Groups detections into one packet per frame from 1 to the last frame present;
// frames without records yield empty packets.
inline std::vector<FramePacket> packets_from_records(const std::vector<MotRecord>& records) {
  FrameIndex last = 0;
  for (const auto& r : records) last = std::max(last, r.frame);
  std::vector<FramePacket> packets(static_cast<std::size_t>(last));
  for (FrameIndex f = 1; f <= last; ++f) packets[static_cast<std::size_t>(f - 1)].frame = f;
  for (const auto& r : records) {
    packets[static_cast<std::size_t>(r.frame - 1)].detections.push_back(
        Detection{r.box(), std::clamp(r.confidence, 0.0, 1.0), r.frame});
  }
  return packets;
}

inline std::vector<FramePacket> read_detections(const std::filesystem::path& path) {
  return packets_from_records(read_records(path));
}

enum class TrackFileRole {
  kHypothesis,
  kGroundTruth,  // rows whose confidence ("consider" flag) is 0 are ignored
};

inline std::vector<Trajectory> trajectories_from_records(const std::vector<MotRecord>& records, TrackFileRole role) {
  std::map<TrackId, Trajectory> by_id;
  for (const auto& r : records) {
    if (role == TrackFileRole::kGroundTruth && r.confidence == 0.0) continue;
    auto& traj = by_id[r.id];
    traj.id = r.id;
    traj.boxes[r.frame] = HistoryEntry{r.box(), r.confidence, r.confidence < 0.0};
  }
  std::vector<Trajectory> out;
  out.reserve(by_id.size());
  for (auto& [id, traj] : by_id) out.push_back(std::move(traj));
  return out;
}

inline std::vector<Trajectory> read_tracks(const std::filesystem::path& path,
                                           TrackFileRole role = TrackFileRole::kHypothesis) {
  return trajectories_from_records(read_records(path), role);
}

namespace detail {

inline void write_line(std::ostream& out, FrameIndex frame, TrackId id, const BoundingBox& b, double conf) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%lld,%lld,%.2f,%.2f,%.2f,%.2f,%.2f,-1,-1,-1\n", static_cast<long long>(frame),
                static_cast<long long>(id), b.x1, b.y1, b.width(), b.height(), conf);
  out << buf;
}

}  // namespace detail

// Rows sorted by frame, then id. Filled boxes carry confidence -1.
inline void write_tracks(const std::vector<Trajectory>& trajectories, std::ostream& out) {
  std::vector<std::tuple<FrameIndex, TrackId, const HistoryEntry*>> rows;
  for (const auto& t : trajectories) {
    for (const auto& [frame, entry] : t.boxes) rows.emplace_back(frame, t.id, &entry);
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  for (const auto& [frame, id, entry] : rows) {
    detail::write_line(out, frame, id, entry->box, entry->filled ? -1.0 : entry->confidence);
  }
}

inline void write_tracks(const std::vector<Trajectory>& trajectories, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  write_tracks(trajectories, out);
}

inline void write_detections(const std::vector<FramePacket>& packets, std::ostream& out) {
  for (const auto& p : packets) {
    for (const auto& d : p.detections) detail::write_line(out, p.frame, -1, d.box, d.confidence);
  }
}

inline void write_detections(const std::vector<FramePacket>& packets, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  write_detections(packets, out);
}

}  // namespace mat::toolkit
