/**
 * @file errors.ts
 * @brief Exceptions thrown by the binding layer.
 *
 * Mirrors the core CLI's exit-code contract: exit 1 surfaces as InputError,
 * exit 2 as NumericalError. Everything the bindings catch on their own side
 * (bad shapes, released handles, launch failures) is also a subclass of
 * BindingError, so `catch (e) { e instanceof BindingError }` covers the
 * whole surface. Nothing here ever aborts the host process.
 */

/** Base class for every error the bindings raise. */
export class BindingError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

/** Invalid argument, malformed array, bad config, or a core exit code 1. */
export class InputError extends BindingError {}

/** The core reported a numerical failure (exit code 2). */
export class NumericalError extends BindingError {}
