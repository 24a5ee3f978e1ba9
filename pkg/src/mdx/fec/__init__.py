"""Desk-scale channel coding: regular LDPC, CRC-16 and transport-block simulation."""

from mdx.fec.crc import CRC16_CCITT, CRC_LEN, crc_attach, crc_check, crc_remainder
from mdx.fec.ldpc import DecodeResult, LdpcCode, build_peg_code, code_from_rows, ldpc_decode, ldpc_encode
from mdx.fec.link import BlerResult, simulate_tb_bler, tb_decode, tb_encode, tb_payload_size

__all__ = [
    "CRC16_CCITT", "CRC_LEN", "BlerResult", "DecodeResult", "LdpcCode", "build_peg_code",
    "code_from_rows", "crc_attach", "crc_check", "crc_remainder", "ldpc_decode", "ldpc_encode",
    "simulate_tb_bler", "tb_decode", "tb_encode", "tb_payload_size",
]
