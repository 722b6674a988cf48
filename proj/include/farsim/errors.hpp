#pragma once

#include <stdexcept>
#include <string>

namespace farsim {

// All simulator faults derive from SimError so the harness can catch one type
// and map it to an exit code.
class SimError : public std::runtime_error {
public:
    explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public SimError {
public:
    explicit ConfigError(const std::string& what) : SimError("config: " + what) {}
};

class AddressFault : public SimError {
public:
    explicit AddressFault(const std::string& what) : SimError("address fault: " + what) {}
};

class DeadlockError : public SimError {
public:
    explicit DeadlockError(const std::string& what) : SimError("deadlock: " + what) {}
};

class LockStateError : public SimError {
public:
    explicit LockStateError(const std::string& what) : SimError("lock state: " + what) {}
};

class OverlapError : public SimError {
public:
    explicit OverlapError(const std::string& what) : SimError("copy overlap: " + what) {}
};

class SpawnError : public SimError {
public:
    explicit SpawnError(const std::string& what) : SimError("spawn: " + what) {}
};

class ProtocolError : public SimError {
public:
    explicit ProtocolError(const std::string& what) : SimError("protocol: " + what) {}
};

class CorrectnessError : public SimError {
public:
    explicit CorrectnessError(const std::string& what) : SimError("correctness: " + what) {}
};

class EncodeError : public SimError {
public:
    explicit EncodeError(const std::string& what) : SimError("encode: " + what) {}
};

class ClosedError : public SimError {
public:
    explicit ClosedError(const std::string& what) : SimError("pipe closed: " + what) {}
};

class ReportError : public SimError {
public:
    explicit ReportError(const std::string& what) : SimError("report: " + what) {}
};

class EmptyGraphError : public SimError {
public:
    explicit EmptyGraphError(const std::string& what) : SimError("empty graph: " + what) {}
};

// Internal invariant violations (notifier overflow, pending-queue overflow...).
// These abort the run with diagnostics; they indicate a guest bug.
class SimulationError : public SimError {
public:
    explicit SimulationError(const std::string& what) : SimError("simulation: " + what) {}
};

}  // namespace farsim
