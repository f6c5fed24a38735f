#pragma once

#include <string>
#include <vector>

namespace vrdie::synth::lex {

inline const std::vector<std::string>& first_names() {
  static const std::vector<std::string> v{"James",  "Mary",   "Robert", "Linda",  "Michael", "Sarah",  "David",
                                          "Karen",  "Daniel", "Nancy",  "Paul",   "Laura",   "Mark",   "Emily",
                                          "George", "Helen",  "Kevin",  "Anna",   "Brian",   "Olivia", "Peter",
                                          "Grace",  "Thomas", "Julia",  "Steven", "Alice",   "Victor", "Irene"};
  return v;
}

inline const std::vector<std::string>& last_names() {
  static const std::vector<std::string> v{"Smith",  "Johnson", "Brown",  "Miller", "Wilson",  "Moore",  "Taylor",
                                          "Clark",  "Lewis",   "Walker", "Hall",   "Young",   "King",   "Wright",
                                          "Scott",  "Green",   "Baker",  "Adams",  "Nelson",  "Carter", "Turner",
                                          "Parker", "Evans",   "Morris", "Cooper", "Bennett", "Reed",   "Howard"};
  return v;
}

inline const std::vector<std::string>& streets() {
  static const std::vector<std::string> v{"Oak",   "Maple", "Cedar", "Pine",   "Elm",    "Lake",
                                          "Hill",  "Park",  "River", "Church", "Market", "Station",
                                          "Mill",  "Bridge", "North", "Spring"};
  return v;
}

inline const std::vector<std::string>& street_kinds() {
  static const std::vector<std::string> v{"Street", "Road", "Avenue", "Lane", "Drive"};
  return v;
}

inline const std::vector<std::string>& cities() {
  static const std::vector<std::string> v{"Springfield", "Riverton", "Fairview", "Greenville", "Madison",
                                          "Clinton",     "Franklin", "Georgetown", "Salem",     "Bristol",
                                          "Ashland",     "Dover",    "Milton",     "Oxford"};
  return v;
}

// Seller company names; group 1 is reserved for held-out templates.
inline const std::vector<std::string>& company_heads(int group) {
  static const std::vector<std::string> g0{"Acme",     "Northwind", "Globex",  "Initech", "Contoso",
                                           "Fabrikam", "Tailspin",  "Vandelay", "Hooli",  "Stark",
                                           "Wayne",    "Cyberdyne", "Soylent", "Wonka",   "Gringotts"};
  static const std::vector<std::string> g1{"Zephyr", "Quantix", "Nimbus",  "Vortex", "Halcyon",
                                           "Orion",  "Lumen",   "Arcadia", "Cobalt", "Borealis"};
  return group == 0 ? g0 : g1;
}

inline const std::vector<std::string>& company_trades(int group) {
  static const std::vector<std::string> g0{"Supplies", "Trading", "Logistics", "Systems", "Industries", "Components"};
  static const std::vector<std::string> g1{"Hospitality", "Hotels", "Appliances", "Catering"};
  return group == 0 ? g0 : g1;
}

inline const std::vector<std::string>& company_suffixes() {
  static const std::vector<std::string> v{"Ltd", "Inc", "LLC", "GmbH", "Co"};
  return v;
}

inline const std::vector<std::string>& item_names() {
  static const std::vector<std::string> v{"Office chairs", "Printer paper",  "Toner cartridge", "Desk lamp",
                                          "Network cable", "Consulting hours", "Cleaning service", "Laptop stand",
                                          "Coffee beans",  "Storage boxes",  "Whiteboard",     "Monitor arm"};
  return v;
}

inline const std::vector<std::string>& months() {
  static const std::vector<std::string> v{"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                          "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  return v;
}

inline const std::vector<std::string>& school_kinds() {
  static const std::vector<std::string> v{"University of {}", "{} State University", "{} Institute of Technology",
                                          "{} College"};
  return v;
}

inline const std::vector<std::string>& degrees() {
  static const std::vector<std::string> v{"BSc", "BA", "MSc", "MBA", "PhD", "BEng"};
  return v;
}

inline const std::vector<std::string>& fields() {
  static const std::vector<std::string> v{"Computer Science", "Economics", "Mechanical Engineering", "Physics",
                                          "Marketing",        "Chemistry", "Statistics",             "History"};
  return v;
}

inline const std::vector<std::string>& employers() {
  static const std::vector<std::string> v{"Brightline Analytics", "Redwood Media",    "Bluepeak Software",
                                          "Ironbridge Partners",  "Silverleaf Foods", "Harborview Health",
                                          "Copperfield Energy",   "Summit Retail",    "Keystone Robotics",
                                          "Lakeshore Consulting"};
  return v;
}

inline const std::vector<std::string>& positions() {
  static const std::vector<std::string> v{"Software Engineer", "Project Manager", "Data Analyst",
                                          "Sales Associate",   "Product Designer", "Research Assistant",
                                          "Operations Lead",   "Account Executive"};
  return v;
}

inline const std::vector<std::string>& skills() {
  static const std::vector<std::string> v{"Python", "Negotiation", "Excel",     "Leadership", "SQL",
                                          "Writing", "Spanish",     "Budgeting", "Teamwork",   "Design"};
  return v;
}

inline const std::vector<std::string>& mail_domains() {
  static const std::vector<std::string> v{"mail.com", "inbox.net", "post.org", "webmail.io"};
  return v;
}

}  // namespace vrdie::synth::lex
