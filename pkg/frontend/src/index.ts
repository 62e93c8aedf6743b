export { FemuClient } from "./client.js";
export type {
  AdcSourceDoc,
  ConfigureAdcArgs,
  ConnectTarget,
  CountersDoc,
  DomainEnergyDoc,
  EnergyEstimate,
  EnergyReportDoc,
  LoadProgramArgs,
  OffloadResult,
  OperandsDoc,
  PhaseAttributionDoc,
  PhaseDoc,
  ProgramDoc,
  RunOutcomeDoc,
  SnapshotDoc,
  SpawnTarget,
  TcpTarget,
} from "./client.js";
export { ConnectFailed, ProtocolError, ServerError } from "./errors.js";
export type { ServerErrorCode } from "./errors.js";
export { StdioTransport, TcpTransport } from "./transport.js";
export type { Transport } from "./transport.js";
