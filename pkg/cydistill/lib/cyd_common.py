# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""Common methods we reuse."""
import contextlib
import hashlib
import json
import os
import sys
import tempfile as tmp

import texttable
import tqdm

import cydistill.lib.cyd_logger

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


class CYDValidationError(RuntimeError):
    """A configuration value or precondition was rejected."""
    exit_code = EXIT_VALIDATION


class CYDNumericalError(RuntimeError):
    """A computation diverged or became ill-conditioned."""
    exit_code = EXIT_NUMERICAL


class ChartError(CYDNumericalError):
    """The dependent coordinate of a chart is near-singular."""


def callback(log, exit_on_error=False):
    """Helper to call the appropriate logging level"""
    lgr_stdout = cydistill.lib.cyd_logger.CYDLogger().cli_log_stdout()
    lgr_stderr = cydistill.lib.cyd_logger.CYDLogger().cli_log_stderr()

    if log['level'] == 'CRITICAL':
        lgr_stderr.critical(log['message'])
    elif log['level'] == 'ERROR':
        lgr_stderr.error(log['message'])
    elif log['level'] == 'WARNING':
        lgr_stderr.warning(log['message'])
    elif log['level'] == 'INFO':
        lgr_stdout.info(log['message'])
    elif log['level'] == 'DEBUG':
        lgr_stdout.debug(log['message'])
    elif log['level'] == 'VERBOSE':
        lgr_stdout.verbose(log['message'])
    elif log['level'] == 'NOTICE':
        lgr_stdout.notice(log['message'])
    elif log['level'] == 'EXCEPTION':
        if not _isatty() and not exit_on_error:
            raise RuntimeError(log['message'])
        else:
            lgr_stderr.error(log['message'])
            raise SystemExit(log.get('exit_code', 1))


def _isatty():
    try:
        return os.isatty(sys.stdout.fileno())
    except (AttributeError, ValueError, OSError):
        # CliRunner and friends hand us streams without a descriptor.
        return False


def logit(content, exit_on_error=False, _callback=None,
          silent=False):
    """Helper to check callable status of callback or call ours."""
    level = content["level"]
    msg = content["message"]

    if silent and level != "EXCEPTION":
        # They need to see these errors, too bad!
        return

    log = {"level": level, "message": msg}

    if "exit_code" in content:
        log["exit_code"] = content["exit_code"]

    # This will log with our callback method if they didn't supply one.
    _callback = _callback if callable(_callback) else callback
    _callback(log, exit_on_error)


def raise_error(err, exit_on_error=False, _callback=None):
    """Route a library error through logit with its exit code."""
    logit({
        "level"    : "EXCEPTION",
        "message"  : str(err),
        "exit_code": getattr(err, "exit_code", 1)
    }, exit_on_error=exit_on_error, _callback=_callback)


def progress(iterable, desc, silent=False, total=None):
    """tqdm wrapper that goes quiet for library callers."""
    return tqdm.tqdm(iterable, desc=desc, total=total, disable=silent,
                     leave=False, file=sys.stderr)


def draw_table(header, rows, dtype=None, precision=None):
    """Render rows with texttable the same way everywhere."""
    table = texttable.Texttable(max_width=0)

    if precision is not None:
        table.set_precision(precision)

    if dtype is not None:
        table.set_cols_dtype(dtype)

    table.header(header)

    for row in rows:
        table.add_row(row)

    return table.draw()


def derive_seed(root, *keys):
    """
    Derive a child seed from the root seed and a path of keys.

    The derivation is sha256 over "root/key1/key2/..." truncated to 63 bits,
    so any stage can be replayed in isolation from the root seed alone.
    """
    path = "/".join([str(int(root))] + [str(k) for k in keys])
    digest = hashlib.sha256(path.encode("utf-8")).digest()

    return int.from_bytes(digest[:8], "big") & (2 ** 63 - 1)


def psi_key(psi):
    return f"{float(psi):.6f}"


def file_sha256(path):
    sha = hashlib.sha256()

    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            sha.update(chunk)

    return sha.hexdigest()


def config_hash(conf):
    """sha256 of the canonical JSON form of a config dict."""
    canonical = json.dumps(conf, sort_keys=True, separators=(",", ":"))

    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# http://stackoverflow.com/questions/2333872/atomic-writing-to-file-with-python
@contextlib.contextmanager
def tempfile(suffix='', dir=None):
    """
    Context for temporary file.

    Will find a free temporary filename upon entering
    and will try to delete the file on leaving, even in case of an exception.

    Parameters
    ----------
    suffix : string
        optional file suffix
    dir : string
        optional directory to save temporary file in
    """

    tf = tmp.NamedTemporaryFile(delete=False, suffix=suffix, dir=dir)
    tf.file.close()
    try:
        yield tf.name
    finally:
        try:
            os.remove(tf.name)
        except FileNotFoundError:
            pass


@contextlib.contextmanager
def open_atomic(filepath, *args, **kwargs):
    """
    Open temporary file object that atomically moves to destination upon
    exiting.

    The file will not be moved to destination in case of an exception.

    Parameters
    ----------
    filepath : string
        the file path to be opened
    fsync : bool
        whether to force write the file to disk
    *args : mixed
        Any valid arguments for :code:`open`
    **kwargs : mixed
        Any valid keyword arguments for :code:`open`
    """
    fsync = kwargs.pop('fsync', False)
    directory = os.path.dirname(os.path.abspath(filepath))
    os.makedirs(directory, exist_ok=True)

    with tempfile(dir=directory) as tmppath:
        with open(tmppath, *args, **kwargs) as file:
            try:
                yield file
            finally:
                if fsync:
                    file.flush()
                    os.fsync(file.fileno())
        os.replace(tmppath, filepath)
        os.chmod(filepath, 0o644)
