"""Master/slave block control plane: wire codec, addressing, daisy chain.

Wire frame layout (one frame per bus message on the emulated inter-block
link): [0xA5, version, dest, opcode, length, payload..., crc_hi, crc_lo]
with a CRC-16/CCITT-FALSE over version..payload.  dest is a 4-bit block
address (0x00-0x0F) or 0xFF for broadcast.

Routing is directional, as on a physical daisy chain: down-bound frames
travel master -> tail and are consumed by the addressed block (broadcast
frames are consumed and forwarded), up-bound frames travel toward the
master and are forwarded untouched.  In up-bound replies the dest byte
names the *subject* block (the responder), since the wire has no source
field.  Slaves validate only frames they must consume; anything else is
forwarded byte-identical (store-and-forward after local processing).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .errors import RisError
from .geometry import ArrayGeometry, check_config

SOF = 0xA5
PROTOCOL_VERSION = 0x01
BROADCAST = 0xFF
MAX_PAYLOAD = 64

OP_SET_CONFIG = 0x01
OP_GET_STATUS = 0x02
OP_STATUS_REPLY = 0x03
OP_PING = 0x04
OP_PONG = 0x05
OP_RESET = 0x06

# opcode -> exact payload length (None = any length up to MAX_PAYLOAD)
_PAYLOAD_LEN = {
    OP_SET_CONFIG: 8,
    OP_GET_STATUS: 0,
    OP_STATUS_REPLY: 1,
    OP_PING: 0,
    OP_PONG: 1,
    OP_RESET: 0,
}

STATUS_OK = 0x00


class ControlError(RisError):
    pass


class FrameDecodeError(RisError):
    """Raised by decode_frame; `code` is one of BAD_SOF, TRUNCATED,
    BAD_CRC, BAD_OPCODE (the last also covers opcode/payload mismatches)."""


def crc16(data: bytes) -> int:
    """CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no XOR-out.

    Check value: crc16(b"123456789") == 0x29B1.
    """
    crc = 0xFFFF
    for byte in data:
        crc ^= byte << 8
        for _ in range(8):
            if crc & 0x8000:
                crc = ((crc << 1) ^ 0x1021) & 0xFFFF
            else:
                crc = (crc << 1) & 0xFFFF
    return crc


@dataclass(frozen=True)
class Frame:
    dest: int
    opcode: int
    payload: bytes = b""
    version: int = PROTOCOL_VERSION

    def __post_init__(self):
        if not (0 <= self.dest <= 0x0F or self.dest == BROADCAST):
            raise ControlError("BAD_ADDRESS", f"dest 0x{self.dest:02X} not a 4-bit address or broadcast")
        if self.opcode not in _PAYLOAD_LEN:
            raise ControlError("BAD_OPCODE", f"unknown opcode 0x{self.opcode:02X}")
        expected = _PAYLOAD_LEN[self.opcode]
        if expected is not None and len(self.payload) != expected:
            raise ControlError(
                "PAYLOAD_MISMATCH",
                f"opcode 0x{self.opcode:02X} requires {expected}-byte payload, got {len(self.payload)}",
            )
        if len(self.payload) > MAX_PAYLOAD:
            raise ControlError("PAYLOAD_MISMATCH", f"payload exceeds {MAX_PAYLOAD} bytes")


def encode_frame(frame: Frame) -> bytes:
    """Serialize a frame to its bit-exact wire form."""
    body = bytes([frame.version, frame.dest, frame.opcode, len(frame.payload)]) + frame.payload
    crc = crc16(body)
    return bytes([SOF]) + body + bytes([crc >> 8, crc & 0xFF])


def decode_frame(data: bytes) -> Frame:
    """Parse raw bytes into a Frame, rejecting anything malformed.

    Checks, in order: SOF byte, byte count against the length field
    (TRUNCATED also covers trailing garbage), CRC, then opcode validity
    and the opcode's payload-length contract.
    """
    if len(data) < 1 or data[0] != SOF:
        if len(data) == 0:
            raise FrameDecodeError("TRUNCATED", "empty input")
        raise FrameDecodeError("BAD_SOF", f"expected SOF 0x{SOF:02X}, got 0x{data[0]:02X}")
    if len(data) < 7:
        raise FrameDecodeError("TRUNCATED", f"frame needs >= 7 bytes, got {len(data)}")
    length = data[4]
    if len(data) != 7 + length:
        raise FrameDecodeError(
            "TRUNCATED", f"length field {length} inconsistent with {len(data)} frame bytes"
        )
    body = data[1:5 + length]
    crc = (data[-2] << 8) | data[-1]
    if crc16(body) != crc:
        raise FrameDecodeError("BAD_CRC", f"CRC mismatch (got 0x{crc:04X})")
    version, dest, opcode = data[1], data[2], data[3]
    if opcode not in _PAYLOAD_LEN:
        raise FrameDecodeError("BAD_OPCODE", f"unknown opcode 0x{opcode:02X}")
    expected = _PAYLOAD_LEN[opcode]
    if expected is not None and length != expected:
        raise FrameDecodeError(
            "BAD_OPCODE", f"opcode 0x{opcode:02X} requires {expected}-byte payload, got {length}"
        )
    if not (0 <= dest <= 0x0F or dest == BROADCAST):
        raise FrameDecodeError("BAD_OPCODE", f"dest 0x{dest:02X} not addressable")
    return Frame(dest=dest, opcode=opcode, payload=bytes(data[5:5 + length]), version=version)


# -- configuration packing -----------------------------------------------


def pack_block_payload(bits: np.ndarray) -> bytes:
    """Pack a block bit matrix (<= 8x8) into the fixed 8-byte payload.

    Bits go row-major, MSB-first within each byte; a smaller block sits in
    the top-left of the 8x8 bit frame with the unused bits zero.
    """
    rows, cols = bits.shape
    if rows > 8 or cols > 8:
        raise ControlError("PARTITION", f"block {rows}x{cols} exceeds the 8x8 payload frame")
    out = bytearray(8)
    for r in range(rows):
        byte = 0
        for c in range(cols):
            byte |= int(bits[r, c]) << (7 - c)
        out[r] = byte
    return bytes(out)


def unpack_block_payload(payload: bytes, rows: int = 8, cols: int = 8) -> np.ndarray:
    if len(payload) != 8:
        raise ControlError("PARTITION", f"block payload must be 8 bytes, got {len(payload)}")
    bits = np.zeros((rows, cols), dtype=np.uint8)
    for r in range(rows):
        for c in range(cols):
            bits[r, c] = (payload[r] >> (7 - c)) & 1
    return bits


def partition_config(bits: np.ndarray, geom: ArrayGeometry) -> dict:
    """Split a global config into per-block payloads keyed by address.

    The block at tile (i, j) gets address i*tile_cols + j and the
    sub-matrix covering its element rows/cols.  Tilings over 16 blocks
    are not addressable.
    """
    bits = check_config(bits, geom)
    if geom.n_blocks > 16:
        raise ControlError("PARTITION", f"tiling has {geom.n_blocks} blocks; only 16 are addressable")
    out = {}
    br, bc = geom.block_rows, geom.block_cols
    for i in range(geom.tile_rows):
        for j in range(geom.tile_cols):
            sub = bits[i * br:(i + 1) * br, j * bc:(j + 1) * bc]
            out[i * geom.tile_cols + j] = pack_block_payload(sub)
    return out


def reassemble_config(payloads: dict, geom: ArrayGeometry) -> np.ndarray:
    """Inverse of partition_config: per-address payloads back to the global config."""
    bits = np.zeros((geom.rows, geom.cols), dtype=np.uint8)
    br, bc = geom.block_rows, geom.block_cols
    for i in range(geom.tile_rows):
        for j in range(geom.tile_cols):
            addr = i * geom.tile_cols + j
            if addr not in payloads:
                raise ControlError("PARTITION", f"missing payload for block address {addr}")
            sub = unpack_block_payload(payloads[addr])
            bits[i * br:(i + 1) * br, j * bc:(j + 1) * bc] = sub[:br, :bc]
    return bits


def config_to_hex(bits: np.ndarray) -> str:
    """Row-major hex serialization of a full config (MSB-first per byte,
    zero-padded to a whole byte).  Shared by the CLI, service, and files."""
    flat = np.asarray(bits, dtype=np.uint8).ravel()
    pad = (-len(flat)) % 8
    flat = np.concatenate([flat, np.zeros(pad, dtype=np.uint8)])
    return np.packbits(flat).tobytes().hex()


def config_from_hex(hex_str: str, rows: int, cols: int) -> np.ndarray:
    n = rows * cols
    expected = ((n + 7) // 8) * 2
    hex_str = hex_str.strip()
    if len(hex_str) != expected:
        raise ControlError(
            "BAD_HEX", f"config hex for {rows}x{cols} must be {expected} chars, got {len(hex_str)}",
            expected_chars=expected,
        )
    try:
        raw = bytes.fromhex(hex_str)
    except ValueError as exc:
        raise ControlError("BAD_HEX", f"invalid hex: {exc}") from exc
    flat = np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[:n]
    return flat.reshape(rows, cols).astype(np.uint8)


# -- block state machines --------------------------------------------------


class BlockMode(Enum):
    MASTER = 0
    SLAVE = 1


@dataclass
class Command:
    """North-bound command (master only)."""
    cmd: str                       # apply | status | ping | reset
    config: Optional[np.ndarray] = None


@dataclass(frozen=True)
class RxFrame:
    raw: bytes
    direction: str                 # "down" (from master side) | "up" (toward master)


class TimeoutEvent:
    """Fired by the bus runner when the chain is quiescent but the master
    still awaits replies; each occurrence triggers one retransmission round."""


@dataclass
class _Pending:
    raw: bytes
    retries_left: int = 3
    done: bool = False
    ok: bool = False


class Block:
    """One controller block: pure event-in / (state, frames-out) steps.

    Slaves consume frames addressed to them (updating surface_bits and
    replying up-chain), forward everything else unmodified, and reject
    north-bound commands.  The master partitions APPLY configs, applies
    its own share locally, and tracks per-address acknowledgement with
    bounded retransmission.  A master with `owns_tile=False` is a
    controller-only head driving no surface of its own; that is the only
    layout that can feed a full 16-slave chain, since tile addresses are
    4-bit.
    """

    def __init__(self, mode: BlockMode, address: int,
                 geometry: Optional[ArrayGeometry] = None, owns_tile: bool = True):
        if not 0 <= address <= 15:
            raise ControlError("BAD_ADDRESS", f"block address {address} not in 0..15")
        if mode is BlockMode.MASTER and geometry is None:
            raise ControlError("BAD_CHAIN", "master block needs the surface geometry")
        self.mode = mode
        self.address = address
        self.geometry = geometry
        self.owns_tile = owns_tile
        self.surface_bits = np.zeros((8, 8), dtype=np.uint8)
        self.configured = False
        self.powered = True
        self.frames_seen = 0
        self.last_error: Optional[str] = None
        self.last_status: Optional[int] = None
        self.pending: dict[int, _Pending] = {}
        self.census: dict[int, list] = {}

    # -- shared helpers

    def _apply_payload(self, payload: bytes):
        self.surface_bits = unpack_block_payload(payload)
        self.configured = True

    def _reply(self, opcode: int, payload: bytes) -> tuple:
        return ("up", encode_frame(Frame(dest=self.address, opcode=opcode, payload=payload)))

    def has_pending(self) -> bool:
        return any(not p.done for p in self.pending.values())

    def transaction_report(self) -> dict:
        return {addr: ("ok" if p.ok else "failed" if p.done else "pending")
                for addr, p in sorted(self.pending.items())}

    # -- event dispatch

    def step(self, event) -> list:
        """Process one event; returns [(direction, raw_bytes), ...] to emit."""
        if not self.powered:
            return []
        if isinstance(event, Command):
            if self.mode is not BlockMode.MASTER:
                raise ControlError("MODE_VIOLATION",
                                   f"slave block {self.address} received north-bound command {event.cmd!r}")
            return self._master_command(event)
        if isinstance(event, TimeoutEvent):
            return self._master_timeout() if self.mode is BlockMode.MASTER else []
        if isinstance(event, RxFrame):
            if self.mode is BlockMode.MASTER:
                return self._master_rx(event)
            return self._slave_rx(event)
        raise ControlError("BAD_EVENT", f"unknown event {event!r}")

    # -- master side

    def _master_command(self, event: Command) -> list:
        out = []
        self.pending = {}
        if event.cmd == "apply":
            payloads = partition_config(event.config, self.geometry)
            for addr in sorted(payloads):
                if addr == self.address and self.owns_tile:
                    self._apply_payload(payloads[addr])
                    self.pending[addr] = _Pending(b"", done=True, ok=True)
                else:
                    raw = encode_frame(Frame(dest=addr, opcode=OP_SET_CONFIG, payload=payloads[addr]))
                    self.pending[addr] = _Pending(raw)
                    out.append(("down", raw))
        elif event.cmd == "ping":
            self.census = {self.address: [self.mode.name, 1]} if self.owns_tile else {}
            out.append(("down", encode_frame(Frame(dest=BROADCAST, opcode=OP_PING))))
        elif event.cmd == "status":
            self.last_status = STATUS_OK
            out.append(("down", encode_frame(Frame(dest=BROADCAST, opcode=OP_GET_STATUS))))
        elif event.cmd == "reset":
            self.surface_bits = np.zeros((8, 8), dtype=np.uint8)
            self.configured = True
            out.append(("down", encode_frame(Frame(dest=BROADCAST, opcode=OP_RESET))))
        else:
            raise ControlError("BAD_COMMAND", f"unknown command {event.cmd!r}")
        return out

    def _master_timeout(self) -> list:
        out = []
        for pend in self.pending.values():
            if pend.done:
                continue
            if pend.retries_left > 0:
                pend.retries_left -= 1
                out.append(("down", pend.raw))
            else:
                pend.done = True
                pend.ok = False
        return out

    def _master_rx(self, event: RxFrame) -> list:
        if event.direction != "up":
            return []  # nothing sits above the master
        try:
            frame = decode_frame(event.raw)
        except FrameDecodeError as exc:
            self.last_error = exc.code
            return []
        self.frames_seen += 1
        subject = frame.dest
        if frame.opcode == OP_STATUS_REPLY:
            if subject in self.pending and not self.pending[subject].done:
                pend = self.pending[subject]
                pend.done = True
                pend.ok = frame.payload[0] == STATUS_OK
        elif frame.opcode == OP_PONG:
            entry = self.census.setdefault(subject, [None, 0])
            entry[0] = BlockMode.SLAVE.name if frame.payload[0] else BlockMode.MASTER.name
            entry[1] += 1
        return []

    # -- slave side

    def _slave_rx(self, event: RxFrame) -> list:
        if event.direction == "up":
            return [("up", event.raw)]  # replies pass through untouched
        raw = event.raw
        if len(raw) < 3:
            self.last_error = "TRUNCATED"
            return []
        dest = raw[2]
        if dest != self.address and dest != BROADCAST:
            return [("down", raw)]  # not ours: forward byte-identical
        try:
            frame = decode_frame(raw)
        except FrameDecodeError as exc:
            self.last_error = exc.code
            return []
        self.frames_seen += 1
        out = []
        if frame.opcode == OP_SET_CONFIG:
            self._apply_payload(frame.payload)
            out.append(self._reply(OP_STATUS_REPLY, bytes([STATUS_OK])))
        elif frame.opcode == OP_GET_STATUS:
            status = STATUS_OK if self.last_error is None else 0x01
            out.append(self._reply(OP_STATUS_REPLY, bytes([status])))
        elif frame.opcode == OP_PING:
            out.append(self._reply(OP_PONG, bytes([1])))
        elif frame.opcode == OP_RESET:
            self.surface_bits = np.zeros((8, 8), dtype=np.uint8)
            self.configured = True
            out.append(self._reply(OP_STATUS_REPLY, bytes([STATUS_OK])))
        if frame.dest == BROADCAST:
            out.append(("down", raw))  # broadcast: consume and forward
        return out


# -- virtual daisy-chain bus -----------------------------------------------


class Chain:
    """Master plus slaves on an emulated frame-delimited daisy chain.

    Link i joins block i to block i+1 with a FIFO per direction; delivery
    order is deterministic.  A fault hook may rewrite or drop bytes on any
    link, and the power feed can be cut after a given link.  Every
    delivery is appended to a JSON-lines-able trace with a logical step
    counter (no wall clock, so runs replay byte-identically).
    """

    def __init__(self, geometry: ArrayGeometry, addresses: Optional[list] = None,
                 master_owns_tile: bool = True, modes: Optional[list] = None):
        if geometry.n_blocks > 16:
            raise ControlError("PARTITION",
                               f"tiling has {geometry.n_blocks} blocks; only 16 are addressable")
        if addresses is None:
            addresses = list(range(geometry.n_blocks))
        if len(addresses) != geometry.n_blocks:
            raise ControlError("BAD_CHAIN",
                               f"{len(addresses)} addresses for {geometry.n_blocks} blocks")
        if master_owns_tile:
            plan = list(zip([BlockMode.MASTER] + [BlockMode.SLAVE] * (geometry.n_blocks - 1),
                            addresses))
        else:
            # controller-only head: every tile belongs to a slave
            plan = [(BlockMode.MASTER, 0)] + [(BlockMode.SLAVE, a) for a in addresses]
        if modes is not None:
            plan = [(m, a) for m, (_, a) in zip(modes, plan)]
        n_masters = sum(1 for m, _ in plan if m is BlockMode.MASTER)
        n_slaves = sum(1 for m, _ in plan if m is BlockMode.SLAVE)
        if n_masters != 1:
            raise ControlError("CHAIN_CAPACITY", f"chain needs exactly one master, got {n_masters}")
        if n_slaves > 16:
            raise ControlError("CHAIN_CAPACITY", f"{n_slaves} slaves exceeds the 16-slave limit")
        if plan[0][0] is not BlockMode.MASTER:
            raise ControlError("BAD_CHAIN", "the master must head the chain")
        self.geometry = geometry
        self.blocks = [Block(BlockMode.MASTER, plan[0][1], geometry, owns_tile=master_owns_tile)]
        self.blocks += [Block(mode, addr) for mode, addr in plan[1:]]
        self.fault_hook = None     # callable(link, direction, raw) -> raw | None
        self.power_cut_after: Optional[int] = None
        self.trace_log: list = []
        self._step = 0
        self._queues = {}          # (link, direction) -> list of raw bytes

    @property
    def master(self) -> Block:
        return self.blocks[0]

    # -- power feed

    def _refresh_power(self):
        powered = True
        for i, block in enumerate(self.blocks):
            block.powered = powered
            if self.power_cut_after is not None and i == self.power_cut_after:
                powered = False

    def cut_power_after(self, link: Optional[int]):
        self.power_cut_after = link
        self._refresh_power()

    # -- bus mechanics

    def _enqueue(self, from_idx: int, emissions):
        for direction, raw in emissions:
            if direction == "down":
                if from_idx + 1 < len(self.blocks):
                    self._queues.setdefault((from_idx, "down"), []).append(raw)
            else:
                if from_idx - 1 >= 0:
                    self._queues.setdefault((from_idx - 1, "up"), []).append(raw)

    def _deliver_one(self) -> bool:
        for key in sorted(self._queues, key=lambda k: (k[0], k[1])):
            queue = self._queues[key]
            if not queue:
                continue
            link, direction = key
            raw = queue.pop(0)
            if self.fault_hook is not None:
                raw = self.fault_hook(link, direction, raw)
                if raw is None:
                    return True  # dropped on the wire
            self._step += 1
            self.trace_log.append({"t": self._step, "link": link,
                                   "direction": direction, "bytes": raw.hex()})
            to_idx = link + 1 if direction == "down" else link
            emissions = self.blocks[to_idx].step(RxFrame(raw, direction))
            self._enqueue(to_idx, emissions)
            return True
        return False

    def _run_bus(self):
        while self._deliver_one():
            pass

    def _run_transaction(self, command: Command) -> Block:
        self._refresh_power()
        master = self.master
        self._enqueue(0, master.step(command))
        self._run_bus()
        while master.has_pending():
            self._enqueue(0, master.step(TimeoutEvent()))
            self._run_bus()
        return master

    # -- north-bound operations

    def apply_global(self, bits: np.ndarray) -> dict:
        """Partition, transmit, and acknowledge a global config.

        Returns {address: "ok" | "failed"}; failures are isolated per
        address (timeout after 3 retransmissions).
        """
        master = self._run_transaction(Command("apply", config=bits))
        return master.transaction_report()

    def census(self) -> dict:
        """PING broadcast census: {address: mode name}.  Raises
        ADDRESS_CONFLICT when two blocks answer with the same address."""
        master = self._run_transaction(Command("ping"))
        conflicts = [a for a, (_, count) in master.census.items() if count > 1]
        if conflicts:
            raise ControlError("ADDRESS_CONFLICT",
                               f"duplicate block address(es): {sorted(conflicts)}",
                               addresses=sorted(conflicts))
        return {addr: mode for addr, (mode, _) in sorted(master.census.items())}

    def reset(self) -> dict:
        self._run_transaction(Command("reset"))
        return {b.address: "ok" for b in self.blocks if b.owns_tile}

    def assemble(self) -> np.ndarray:
        """Global config recomposed from every surface-owning block's bits."""
        payloads = {}
        for block in self.blocks:
            if not block.owns_tile:
                continue
            if not (block.powered and block.configured):
                raise ControlError("BLOCK_NOT_READY",
                                   f"block {block.address} is "
                                   f"{'unpowered' if not block.powered else 'unconfigured'}",
                                   address=block.address)
            payloads[block.address] = pack_block_payload(block.surface_bits)
        return reassemble_config(payloads, self.geometry)

    def execute(self, command: dict) -> dict:
        """North-bound JSON command: {"cmd": ..., "config_hex": optional}."""
        cmd = command.get("cmd")
        if cmd == "apply":
            bits = config_from_hex(command["config_hex"], self.geometry.rows, self.geometry.cols)
            return {"cmd": "apply", "blocks": self.apply_global(bits)}
        if cmd == "ping":
            return {"cmd": "ping", "blocks": self.census()}
        if cmd == "reset":
            return {"cmd": "reset", "blocks": self.reset()}
        if cmd == "status":
            master = self._run_transaction(Command("status"))
            del master
            return {"cmd": "status", "blocks": self.block_summary()}
        raise ControlError("BAD_COMMAND", f"unknown command {cmd!r}")

    def block_summary(self) -> list:
        return [{"address": b.address, "mode": b.mode.name, "powered": b.powered,
                 "configured": b.configured, "frames_seen": b.frames_seen,
                 "last_error": b.last_error} for b in self.blocks]

    def dump_trace(self, path):
        with open(path, "w") as fh:
            for row in self.trace_log:
                fh.write(json.dumps(row) + "\n")
