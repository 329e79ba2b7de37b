#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lrwi/acquisition.hpp"
#include "lrwi/grid_io.hpp"

namespace lrwi {

// LRWI-DATA v1:
//   LRWI-DATA v1 ns=<int> nr=<int> nf=<int>
//   <nf frequencies in Hz on one line>
//   ns*nr*nf lines "s r f re im", lexicographic in (s, r, f), 0-based.
inline void write_data_file(const std::filesystem::path& path,
                            const ObservedData& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write data file " + path.string());
  out << "LRWI-DATA v1 ns=" << data.ns << " nr=" << data.nr
      << " nf=" << data.nf() << "\n";
  for (int jf = 0; jf < data.nf(); ++jf) {
    if (jf) out << ' ';
    out << detail::format_double(data.freqs[jf]);
  }
  out << '\n';
  for (int s = 0; s < data.ns; ++s)
    for (int r = 0; r < data.nr; ++r)
      for (int f = 0; f < data.nf(); ++f) {
        const cd v = data.at(s, r, f);
        out << s << ' ' << r << ' ' << f << ' '
            << detail::format_double(v.real()) << ' '
            << detail::format_double(v.imag()) << '\n';
      }
  if (!out) throw IoError("failed while writing " + path.string());
}

inline ObservedData read_data_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open data file " + path.string());

  std::string header;
  if (!std::getline(in, header))
    throw ConfigError("data file " + path.string() + ": empty file");
  std::istringstream hs(header);
  std::string magic, version, t_ns, t_nr, t_nf, extra;
  hs >> magic >> version >> t_ns >> t_nr >> t_nf;
  if (!hs || magic != "LRWI-DATA" || version != "v1")
    throw ConfigError("data file " + path.string() +
                      ": header must start with 'LRWI-DATA v1'");
  if (hs >> extra)
    throw ConfigError("data file " + path.string() +
                      ": trailing tokens in header");
  const int ns = detail::parse_int(detail::header_field(t_ns, "ns"), "ns");
  const int nr = detail::parse_int(detail::header_field(t_nr, "nr"), "nr");
  const int nf = detail::parse_int(detail::header_field(t_nf, "nf"), "nf");
  if (ns <= 0 || nr <= 0 || nf <= 0)
    throw ConfigError("data file " + path.string() +
                      ": nonpositive axis size");

  std::string fline;
  if (!std::getline(in, fline))
    throw ConfigError("data file " + path.string() +
                      ": missing frequency line");
  std::istringstream fs(fline);
  std::vector<double> freqs(static_cast<std::size_t>(nf));
  for (int jf = 0; jf < nf; ++jf)
    if (!(fs >> freqs[static_cast<std::size_t>(jf)]))
      throw ConfigError("data file " + path.string() + ": expected " +
                        std::to_string(nf) + " frequencies");
  std::string rest;
  if (fs >> rest)
    throw ConfigError("data file " + path.string() +
                      ": too many frequencies");
  check_frequencies(freqs);

  ObservedData data(ns, nr, freqs);
  std::string line;
  for (int s = 0; s < ns; ++s)
    for (int r = 0; r < nr; ++r)
      for (int f = 0; f < nf; ++f) {
        if (!std::getline(in, line))
          throw ConfigError("data file " + path.string() +
                            ": truncated sample list");
        std::istringstream ls(line);
        int rs, rr, rf;
        double re, im;
        if (!(ls >> rs >> rr >> rf >> re >> im) || (ls >> rest))
          throw ConfigError("data file " + path.string() +
                            ": malformed sample line '" + line + "'");
        if (rs != s || rr != r || rf != f)
          throw ConfigError("data file " + path.string() +
                            ": samples out of lexicographic order at (" +
                            std::to_string(s) + "," + std::to_string(r) +
                            "," + std::to_string(f) + ")");
        data.at(s, r, f) = cd(re, im);
      }
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos)
      throw ConfigError("data file " + path.string() +
                        ": unexpected trailing content");
  }
  return data;
}

}  // namespace lrwi
