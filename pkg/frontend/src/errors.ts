/** Error codes the server puts in `error.code` of a failed reply. */
export type ServerErrorCode =
  | "BadArguments"
  | "MissingInput"
  | "InvalidState"
  | "UnknownCommand"
  | "UnknownTarget"
  | "UnknownKernel"
  | "ShapeMismatch"
  | "OutOfRange"
  | "DuplicateName"
  | "ModelValidation"
  | "ModelMismatch"
  | "MailboxBusy"
  | "FifoUnderrun"
  | "UnbalancedMarkers"
  | "AssertionFailed"
  | "InternalError"
  | (string & {});

/** The server could not be spawned or reached, or the handshake failed. */
export class ConnectFailed extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ConnectFailed";
  }
}

/**
 * The transport delivered something that is not a valid reply: stream
 * closed mid-request, unparseable line, or an id that does not match
 * the request in flight.
 */
export class ProtocolError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ProtocolError";
  }
}

/** An `ok: false` reply; `code` is the wire error code verbatim. */
export class ServerError extends Error {
  readonly code: ServerErrorCode;

  constructor(code: ServerErrorCode, message: string) {
    super(message);
    this.name = "ServerError";
    this.code = code;
  }
}
