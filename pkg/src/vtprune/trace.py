"""Episode trace format (.vlat): read, write, score, and synthesize.

A trace decouples the pruning engine from any model runtime.  The format is
line-delimited: the first line is a JSON header, each following line one
frame.  Structural fields are plain JSON; numeric arrays are flat
little-endian float32 buffers, C-order, base64-encoded, so files stay
streamable and diff-able while arrays round-trip bit-exactly at storage
precision.

Payload kinds:

* RAW    - frames carry the last-layer prefill attention matrix
           ((N+M) x (N+M)), per-layer decode attention rows
           (layers x rows x (N+M)), and patch embeddings (M x embed_dim).
* SCORED - frames carry precomputed per-patch score vectors instead of
           attention: prefill scores (M,) and per-layer decode scores
           (layers x M).  Exporters that cannot afford to dump attention
           tensors write this kind.

The synthesizer drives decode attention with a Gaussian random walk over
patch logits (plus per-frame transient noise and an optional peak that jumps
to a random patch every ``shift_every`` frames, exercising estimator failure
under abrupt target switches).  Generation uses numpy's PCG64 so identical
(seed, config, header) always regenerate identical traces.

Readers are streaming and single-cursor; any number of independent readers
on one file are safe.  Writers are exclusive per file.  The environment
variable VTPRUNE_IO_BUFFER overrides the I/O buffer size (bytes) and nothing
else.
"""

from __future__ import annotations

import base64
import enum
import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .attention import (
    TokenLayout,
    average_layer_scores,
    decode_scores,
    latter_half_range,
    prefill_scores,
)
from .errors import ConfigError, TraceFormatError

FORMAT_NAME = "vlat"
FORMAT_VERSION = 1

# decode rows synthesized per layer, by policy family
DECODE_ROWS = {"autoregressive": 7, "chunk": 8, "flow-averaged": 1}
PEAK_BOOST = 4.0  # logit bump on the currently attended patch
EMBED_CLUSTERS = 8
ROW_JITTER = 0.1  # per-query-row logit jitter (RAW payloads)
LAYER_JITTER = 0.05  # per-layer logit jitter on decode attention


class PayloadKind(str, enum.Enum):
    RAW = "raw"
    SCORED = "scored"


class DecodeMode(str, enum.Enum):
    AUTOREGRESSIVE = "autoregressive"
    CHUNK = "chunk"
    FLOW_AVERAGED = "flow-averaged"


@dataclass(frozen=True)
class TraceHeader:
    m_visual: int
    n_text: int
    layers: int
    embed_dim: int
    payload: PayloadKind = PayloadKind.SCORED
    decode_mode: DecodeMode = DecodeMode.AUTOREGRESSIVE
    episode_id: str = "episode-0"
    version: int = FORMAT_VERSION

    def __post_init__(self):
        object.__setattr__(self, "payload", PayloadKind(self.payload))
        object.__setattr__(self, "decode_mode", DecodeMode(self.decode_mode))
        if self.m_visual < 1 or self.layers < 1 or self.embed_dim < 1:
            raise ConfigError("m_visual, layers, embed_dim must all be >= 1")
        if self.n_text < 0:
            raise ConfigError(f"n_text must be >= 0, got {self.n_text}")

    @property
    def context_len(self) -> int:
        return self.n_text + self.m_visual

    @property
    def layout(self) -> TokenLayout:
        # file convention: key axis is [text block, visual block]
        return TokenLayout(n_text=self.n_text, m_visual=self.m_visual)

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "version": self.version,
            "m_visual": self.m_visual,
            "n_text": self.n_text,
            "layers": self.layers,
            "embed_dim": self.embed_dim,
            "payload": self.payload.value,
            "decode_mode": self.decode_mode.value,
            "episode_id": self.episode_id,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "TraceHeader":
        return cls(
            m_visual=obj["m_visual"],
            n_text=obj["n_text"],
            layers=obj["layers"],
            embed_dim=obj["embed_dim"],
            payload=PayloadKind(obj["payload"]),
            decode_mode=DecodeMode(obj["decode_mode"]),
            episode_id=obj["episode_id"],
            version=obj["version"],
        )


@dataclass
class Frame:
    """One timestep's recorded inputs.  Array shapes depend on the payload:

    RAW:    prefill (N+M, N+M), decode (layers, rows, N+M)
    SCORED: prefill (M,),       decode (layers, M)
    both:   embeddings (M, embed_dim)
    """

    timestep: int
    prefill: np.ndarray
    decode: np.ndarray
    embeddings: np.ndarray

    def validate(self, header: TraceHeader):
        n = header.context_len
        if header.payload is PayloadKind.RAW:
            if self.prefill.shape != (n, n):
                raise TraceFormatError(
                    f"frame {self.timestep}: prefill shape {self.prefill.shape}, expected {(n, n)}"
                )
            ok = (
                self.decode.ndim == 3
                and self.decode.shape[0] == header.layers
                and self.decode.shape[1] >= 1
                and self.decode.shape[2] == n
            )
            if not ok:
                raise TraceFormatError(
                    f"frame {self.timestep}: decode shape {self.decode.shape}, "
                    f"expected ({header.layers}, rows>=1, {n})"
                )
        else:
            if self.prefill.shape != (header.m_visual,):
                raise TraceFormatError(
                    f"frame {self.timestep}: prefill scores shape {self.prefill.shape}, "
                    f"expected ({header.m_visual},)"
                )
            if self.decode.shape != (header.layers, header.m_visual):
                raise TraceFormatError(
                    f"frame {self.timestep}: decode scores shape {self.decode.shape}, "
                    f"expected ({header.layers}, {header.m_visual})"
                )
        if self.embeddings.shape != (header.m_visual, header.embed_dim):
            raise TraceFormatError(
                f"frame {self.timestep}: embeddings shape {self.embeddings.shape}, "
                f"expected ({header.m_visual}, {header.embed_dim})"
            )


def _encode_array(arr: np.ndarray) -> dict:
    arr32 = np.ascontiguousarray(arr, dtype="<f4")
    return {
        "shape": list(arr32.shape),
        "data": base64.b64encode(arr32.tobytes()).decode("ascii"),
    }


def _decode_array(obj, what: str, offset: int) -> np.ndarray:
    if not isinstance(obj, dict) or "shape" not in obj or "data" not in obj:
        raise TraceFormatError(f"{what}: missing shape/data fields", offset)
    shape = tuple(int(s) for s in obj["shape"])
    try:
        raw = base64.b64decode(obj["data"], validate=True)
    except Exception as exc:
        raise TraceFormatError(f"{what}: bad base64 payload ({exc})", offset) from exc
    count = int(np.prod(shape)) if shape else 1
    if len(raw) != 4 * count:
        raise TraceFormatError(
            f"{what}: payload holds {len(raw)} bytes, shape {shape} needs {4 * count}", offset
        )
    return np.frombuffer(raw, dtype="<f4").reshape(shape)


def _open(path, mode: str):
    buffering = -1
    override = os.environ.get("VTPRUNE_IO_BUFFER")
    if override:
        buffering = int(override)
    return open(path, mode, buffering=buffering, encoding="utf-8")


def write_trace(path, header: TraceHeader, frames: Iterable[Frame]):
    """Write a header line plus one line per frame.  Streams; validates
    shapes and strictly increasing timesteps as it goes."""
    last_t = None
    with _open(path, "w") as fh:
        fh.write(json.dumps(header.to_dict(), sort_keys=True) + "\n")
        for frame in frames:
            frame.validate(header)
            if last_t is not None and frame.timestep <= last_t:
                raise TraceFormatError(
                    f"timesteps must strictly increase, got {frame.timestep} after {last_t}"
                )
            last_t = frame.timestep
            rec = {
                "timestep": int(frame.timestep),
                "prefill": _encode_array(frame.prefill),
                "decode": _encode_array(frame.decode),
                "embeddings": _encode_array(frame.embeddings),
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _parse_header_line(first: str) -> TraceHeader:
    if not first.strip():
        raise TraceFormatError("empty file, expected a header line", 0)
    try:
        obj = json.loads(first)
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"header is not valid JSON ({exc.msg})", 0) from exc
    if obj.get("format") != FORMAT_NAME:
        raise TraceFormatError(f"not a {FORMAT_NAME} file (format={obj.get('format')!r})", 0)
    if obj.get("version") != FORMAT_VERSION:
        raise TraceFormatError(
            f"unsupported version {obj.get('version')!r}, reader supports {FORMAT_VERSION}", 0
        )
    try:
        return TraceHeader.from_dict(obj)
    except (KeyError, ValueError, ConfigError) as exc:
        raise TraceFormatError(f"bad header field: {exc}", 0) from exc


def read_header(path) -> TraceHeader:
    """Parse just the header line and close the file."""
    with _open(path, "r") as fh:
        return _parse_header_line(fh.readline())


def read_trace(path) -> tuple[TraceHeader, Iterator[Frame]]:
    """Parse the header eagerly and return it with a streaming frame iterator.

    Malformed input raises TraceFormatError carrying the byte offset of the
    offending line.
    """
    fh = _open(path, "r")
    try:
        first = fh.readline()
        header = _parse_header_line(first)
    except Exception:
        fh.close()
        raise

    def frames() -> Iterator[Frame]:
        offset = len(first.encode("utf-8"))
        last_t = None
        with fh:
            for line in fh:
                if not line.endswith("\n") and line.strip():
                    # a frame line without its newline means the writer died mid-record
                    raise TraceFormatError("truncated frame record", offset)
                if not line.strip():
                    offset += len(line.encode("utf-8"))
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise TraceFormatError(
                        f"frame record is not valid JSON ({exc.msg})", offset
                    ) from exc
                if "timestep" not in rec:
                    raise TraceFormatError("frame record missing timestep", offset)
                frame = Frame(
                    timestep=int(rec["timestep"]),
                    prefill=_decode_array(rec.get("prefill"), "prefill", offset),
                    decode=_decode_array(rec.get("decode"), "decode", offset),
                    embeddings=_decode_array(rec.get("embeddings"), "embeddings", offset),
                )
                try:
                    frame.validate(header)
                except TraceFormatError as exc:
                    raise TraceFormatError(str(exc.args[0]), offset) from exc
                if last_t is not None and frame.timestep <= last_t:
                    raise TraceFormatError(
                        f"timesteps must strictly increase, got {frame.timestep} after {last_t}",
                        offset,
                    )
                last_t = frame.timestep
                offset += len(line.encode("utf-8"))
                yield frame

    return header, frames()


def frame_score_vectors(
    header: TraceHeader, frame: Frame, layer_treatment: str = "latter-half"
) -> tuple[np.ndarray, np.ndarray]:
    """Per-patch (semantic, action) score vectors for one frame.

    RAW payloads are aggregated with the attention-scoring operations;
    SCORED payloads use the stored vectors.  ``layer_treatment`` controls the
    decode-layer averaging: "latter-half" for the selection pipeline (the
    latter layers carry the action-relevant signal), "all" for the
    diagnostic overlap analysis.
    """
    if layer_treatment == "latter-half":
        layer_range = latter_half_range(header.layers)
    elif layer_treatment == "all":
        layer_range = (0, header.layers)
    else:
        raise ConfigError(f"unknown layer treatment {layer_treatment!r}")

    layout = header.layout
    if header.payload is PayloadKind.RAW:
        semantic = prefill_scores(frame.prefill, layout)
        per_layer = [decode_scores(frame.decode[l], layout) for l in range(header.layers)]
    else:
        semantic = np.asarray(frame.prefill, dtype=np.float64)
        per_layer = [np.asarray(v, dtype=np.float64) for v in frame.decode]
    action = average_layer_scores(per_layer, layer_range)
    return semantic, action


@dataclass(frozen=True)
class SynthConfig:
    """Synthetic-episode dynamics.

    drift_sigma scales the random-walk step on decode logits (temporal
    continuity knob); noise_sigma adds per-frame transient noise on both
    stages; shift_every, when set, re-draws the attended peak patch every
    that many frames (abrupt target switches).
    """

    seed: int
    frames: int
    drift_sigma: float = 0.1
    noise_sigma: float = 0.3
    shift_every: int | None = None

    def __post_init__(self):
        if self.frames < 1:
            raise ConfigError(f"frames must be >= 1, got {self.frames}")
        if self.drift_sigma < 0 or self.noise_sigma < 0:
            raise ConfigError("sigmas must be >= 0")
        if self.shift_every is not None and self.shift_every < 1:
            raise ConfigError(f"shift_every must be >= 1, got {self.shift_every}")


def _softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    z = logits - logits.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def synthesize_trace(cfg: SynthConfig, header: TraceHeader) -> list[Frame]:
    """Generate an episode of frames under the configured dynamics.

    Deterministic for a given (cfg, header): one PCG64 stream drives every
    draw in a fixed order.  Embeddings are drawn once per episode with
    cluster structure (patches round-robin over EMBED_CLUSTERS centers) and
    repeated on every frame, as a pruning-layer hidden-state stand-in.
    Layer and query-row offsets are also fixed per episode, so with
    drift_sigma = noise_sigma = 0 and no shifts every frame is identical.
    """
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    m, n_text = header.m_visual, header.n_text
    n_ctx = header.context_len
    rows = DECODE_ROWS[header.decode_mode.value]
    raw = header.payload is PayloadKind.RAW

    centers = rng.normal(size=(min(EMBED_CLUSTERS, m), header.embed_dim))
    assign = np.arange(m) % centers.shape[0]
    embeddings = centers[assign] + 0.15 * rng.normal(size=(m, header.embed_dim))
    embeddings = embeddings.astype(np.float32)

    semantic_base = rng.normal(size=m)  # fixed per-episode semantic profile
    text_base = rng.normal(size=n_text)
    layer_offsets = LAYER_JITTER * rng.normal(size=(header.layers, m))
    if raw:
        prefill_row_offsets = ROW_JITTER * rng.normal(size=(n_ctx, n_ctx))
        decode_row_offsets = ROW_JITTER * rng.normal(size=(header.layers, rows, n_ctx))
    walk = rng.normal(size=m)
    peak = int(rng.integers(m))

    frames: list[Frame] = []
    for t in range(cfg.frames):
        if t > 0:
            walk = walk + cfg.drift_sigma * rng.normal(size=m)
            if cfg.shift_every is not None and t % cfg.shift_every == 0:
                peak = int(rng.integers(m))
        sem_logits = semantic_base + cfg.noise_sigma * rng.normal(size=m)
        act_logits = walk + cfg.noise_sigma * rng.normal(size=m)
        act_logits[peak] += PEAK_BOOST

        if not raw:
            prefill = _softmax(sem_logits)
            decode = _softmax(act_logits[None, :] + layer_offsets, axis=1)
        else:
            pre_logits = np.concatenate([text_base, sem_logits])
            prefill = _softmax(pre_logits[None, :] + prefill_row_offsets, axis=1)
            dec_logits = np.concatenate(
                [np.broadcast_to(text_base, (header.layers, n_text)), act_logits + layer_offsets],
                axis=1,
            )
            decode = _softmax(dec_logits[:, None, :] + decode_row_offsets, axis=2)

        frames.append(
            Frame(
                timestep=t,
                prefill=prefill.astype(np.float32),
                decode=decode.astype(np.float32),
                embeddings=embeddings,
            )
        )
    return frames
