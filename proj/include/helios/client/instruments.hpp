#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "helios/sim/channel.hpp"

namespace helios::client {

enum class InstrumentKind { GreenMachine1, GreenMachine3, CLRGB, CLLight };

struct InstrumentInfo {
  InstrumentKind kind;
  std::string_view name;
  std::vector<char> inputs;  // subset of 'R','G','B'
  std::vector<Channel> outputs;
  std::string_view description;
};

inline const std::vector<InstrumentInfo>& instrument_table() {
  static const std::vector<InstrumentInfo> table{
      {InstrumentKind::GreenMachine1, "GreenMachine1", {'G'}, {Channel::W515},
       "GreenMachine1: 1 input (G, green LED level 0-1) and 1 output: the 515nm channel count."},
      {InstrumentKind::GreenMachine3, "GreenMachine3", {'G'}, {Channel::W480, Channel::W515, Channel::W555},
       "GreenMachine3: 1 input (G, green LED level 0-1) and 3 outputs: the 480nm, 515nm and 555nm channel counts."},
      {InstrumentKind::CLRGB, "CLRGB", {'R', 'G', 'B'}, {Channel::W630, Channel::W515, Channel::W445},
       "CLRGB: 3 inputs (R, G, B LED levels 0-1) and 3 outputs: the 630nm, 515nm and 445nm channel counts "
       "(red, green and blue light)."},
      {InstrumentKind::CLLight, "CLLight", {'R', 'G', 'B'},
       {kChannels.begin(), kChannels.end()},
       "CLLight: 3 inputs (R, G, B LED levels 0-1) and 10 outputs: the 415nm, 445nm, 480nm, 515nm, 555nm, "
       "590nm, 630nm, 680nm, clear and nir channel counts."},
  };
  return table;
}

inline const InstrumentInfo& info(InstrumentKind k) {
  for (const auto& i : instrument_table()) {
    if (i.kind == k) return i;
  }
  throw std::invalid_argument("unknown instrument kind");
}

inline const InstrumentInfo& info(std::string_view name) {
  for (const auto& i : instrument_table()) {
    if (i.name == name) return i;
  }
  throw std::invalid_argument("unknown instrument: " + std::string(name));
}

struct CatalogEntry {
  std::string name;
  std::string description;
};

inline std::vector<CatalogEntry> instrument_catalog() {
  std::vector<CatalogEntry> out;
  for (const auto& i : instrument_table()) out.push_back({std::string(i.name), std::string(i.description)});
  return out;
}

}  // namespace helios::client
