"""Lossless coders used as computable upper bounds on description length.

The default coder is LZMW, the Miller-Wegman member of the LZ78 family: the
dictionary starts with all single bytes and each new entry is the
concatenation of the two most recent phrases. Phrase lengths then grow
geometrically on periodic input, so an eventually periodic trajectory costs
O(log n) bits instead of the Theta(sqrt n) of plain LZ78 (also provided).

``compressed_bits`` is the exact length of the emitted stream before the
final byte padding.
"""

from __future__ import annotations

import abc
import lzma
import zlib

from .errors import InvalidInput


def _varint(n: int) -> bytes:
    out = bytearray()
    while True:
        b = n & 0x7F
        n >>= 7
        out.append(b | 0x80 if n else b)
        if not n:
            return bytes(out)


def _read_varint(data: bytes, pos: int) -> tuple[int, int]:
    shift = value = 0
    while True:
        if pos >= len(data):
            raise InvalidInput("truncated stream header")
        b = data[pos]
        pos += 1
        value |= (b & 0x7F) << shift
        if not b & 0x80:
            return value, pos
        shift += 7


class BitWriter:
    def __init__(self):
        self.acc = 0
        self.nbits = 0

    def write(self, value: int, width: int) -> None:
        self.acc = (self.acc << width) | value
        self.nbits += width

    def getvalue(self) -> bytes:
        pad = (-self.nbits) % 8
        return (self.acc << pad).to_bytes((self.nbits + pad) // 8, "big")


class BitReader:
    def __init__(self, data: bytes):
        self.value = int.from_bytes(data, "big")
        self.total = 8 * len(data)
        self.pos = 0

    def read(self, width: int) -> int:
        if self.pos + width > self.total:
            raise InvalidInput("truncated code stream")
        shift = self.total - self.pos - width
        self.pos += width
        return (self.value >> shift) & ((1 << width) - 1)


class Compressor(abc.ABC):
    id: str

    @abc.abstractmethod
    def compress(self, payload: bytes) -> bytes: ...

    @abc.abstractmethod
    def decompress(self, blob: bytes) -> bytes: ...

    def compressed_bits(self, payload: bytes) -> int:
        return 8 * len(self.compress(payload))


def _width(n_entries: int) -> int:
    return max(1, (n_entries - 1).bit_length())


class LZMW(Compressor):
    id = "lzmw"
    TAG = b"W"

    def _encode(self, payload: bytes) -> tuple[bytes, BitWriter]:
        # trie node: [code or -1, {byte: child}]
        root: dict = {b: [b, {}] for b in range(256)}
        n_entries = 256
        bw = BitWriter()
        pos, n = 0, len(payload)
        prev_start = -1
        while pos < n:
            children = root
            node = None
            best_code, best_len = -1, 0
            k = pos
            while k < n:
                node = children.get(payload[k])
                if node is None:
                    break
                k += 1
                if node[0] >= 0:
                    best_code, best_len = node[0], k - pos
                children = node[1]
            bw.write(best_code, _width(n_entries))
            if prev_start >= 0:
                # new entry = previous phrase + current phrase (contiguous in payload)
                children = root
                node = None
                for j in range(prev_start, pos + best_len):
                    b = payload[j]
                    node = children.get(b)
                    if node is None:
                        node = [-1, {}]
                        children[b] = node
                    children = node[1]
                if node[0] < 0:
                    node[0] = n_entries
                    n_entries += 1
            prev_start = pos
            pos += best_len
        return self.TAG + _varint(n), bw

    def compress(self, payload: bytes) -> bytes:
        header, bw = self._encode(bytes(payload))
        return header + bw.getvalue()

    def compressed_bits(self, payload: bytes) -> int:
        header, bw = self._encode(bytes(payload))
        return 8 * len(header) + bw.nbits

    def decompress(self, blob: bytes) -> bytes:
        if blob[:1] != self.TAG:
            raise InvalidInput("not an LZMW stream")
        n, pos = _read_varint(blob, 1)
        entries = [bytes([b]) for b in range(256)]
        known = set(entries)
        br = BitReader(blob[pos:])
        out = bytearray()
        prev = None
        while len(out) < n:
            code = br.read(_width(len(entries)))
            if code >= len(entries):
                raise InvalidInput(f"code {code} not in dictionary")
            cur = entries[code]
            out += cur
            if prev is not None:
                new = prev + cur
                if new not in known:
                    known.add(new)
                    entries.append(new)
            prev = cur
        if len(out) != n:
            raise InvalidInput("stream overruns declared length")
        return bytes(out)


class LZ78(Compressor):
    """Textbook LZ78: (phrase index, next byte) pairs, index width growing with the dictionary."""

    id = "lz78"
    TAG = b"7"

    def _encode(self, payload: bytes) -> tuple[bytes, BitWriter]:
        trie: dict = {}  # (parent index, byte) -> index; index 0 is the empty phrase
        size = 1
        bw = BitWriter()
        cur = 0
        for b in payload:
            nxt = trie.get((cur, b))
            if nxt is not None:
                cur = nxt
                continue
            bw.write(cur, _width(size))
            bw.write(b, 8)
            trie[(cur, b)] = size
            size += 1
            cur = 0
        if cur:
            bw.write(cur, _width(size))
        return self.TAG + _varint(len(payload)), bw

    def compress(self, payload: bytes) -> bytes:
        header, bw = self._encode(bytes(payload))
        return header + bw.getvalue()

    def compressed_bits(self, payload: bytes) -> int:
        header, bw = self._encode(bytes(payload))
        return 8 * len(header) + bw.nbits

    def decompress(self, blob: bytes) -> bytes:
        if blob[:1] != self.TAG:
            raise InvalidInput("not an LZ78 stream")
        n, pos = _read_varint(blob, 1)
        phrases = [b""]
        br = BitReader(blob[pos:])
        out = bytearray()
        while len(out) < n:
            idx = br.read(_width(len(phrases)))
            if idx >= len(phrases):
                raise InvalidInput(f"phrase {idx} not in dictionary")
            phrase = phrases[idx]
            if len(out) + len(phrase) == n:
                out += phrase
                break
            b = br.read(8)
            phrases.append(phrase + bytes([b]))
            out += phrases[-1]
        return bytes(out)


class ZlibCoder(Compressor):
    id = "zlib-9"

    def compress(self, payload: bytes) -> bytes:
        return zlib.compress(bytes(payload), 9)

    def decompress(self, blob: bytes) -> bytes:
        return zlib.decompress(blob)


class LzmaCoder(Compressor):
    id = "lzma"

    def compress(self, payload: bytes) -> bytes:
        return lzma.compress(bytes(payload), format=lzma.FORMAT_RAW,
                             filters=[{"id": lzma.FILTER_LZMA2, "preset": 9}])

    def decompress(self, blob: bytes) -> bytes:
        return lzma.decompress(blob, format=lzma.FORMAT_RAW,
                               filters=[{"id": lzma.FILTER_LZMA2, "preset": 9}])


COMPRESSORS: dict[str, Compressor] = {c.id: c for c in (LZMW(), LZ78(), ZlibCoder(), LzmaCoder())}
DEFAULT_COMPRESSOR = "lzmw"


def get_compressor(cid: str | Compressor = DEFAULT_COMPRESSOR) -> Compressor:
    if isinstance(cid, Compressor):
        return cid
    try:
        return COMPRESSORS[cid]
    except KeyError:
        raise InvalidInput(f"unknown compressor {cid!r}; known: {sorted(COMPRESSORS)}") from None


def compress_bound(payload: bytes, compressor: str | Compressor = DEFAULT_COMPRESSOR) -> int:
    return get_compressor(compressor).compressed_bits(payload)
