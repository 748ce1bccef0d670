#include "vercore/pipeline.hpp"

#include <cstdio>

#include "vercore/error.hpp"

namespace vercore::pipeline {

using isa::Mnemonic;

namespace {

std::uint32_t alu(AluOp op, std::uint32_t a, std::uint32_t b) {
  switch (op) {
    case AluOp::Add: return a + b;
    case AluOp::Sub: return a - b;
    case AluOp::Sll: return a << (b & 31);
    case AluOp::Slt: return static_cast<std::int32_t>(a) < static_cast<std::int32_t>(b) ? 1 : 0;
    case AluOp::Sltu: return a < b ? 1 : 0;
    case AluOp::Xor: return a ^ b;
    case AluOp::Srl: return a >> (b & 31);
    case AluOp::Sra: return static_cast<std::uint32_t>(static_cast<std::int32_t>(a) >> (b & 31));
    case AluOp::Or: return a | b;
    case AluOp::And: return a & b;
    case AluOp::PassB: return b;
  }
  return 0;
}

bool branch_condition(unsigned funct3, std::uint32_t a, std::uint32_t b) {
  const auto sa = static_cast<std::int32_t>(a);
  const auto sb = static_cast<std::int32_t>(b);
  switch (funct3) {
    case 0: return a == b;
    case 1: return a != b;
    case 4: return sa < sb;
    case 5: return sa >= sb;
    case 6: return a < b;
    case 7: return a >= b;
    default: return false;
  }
}

IdExCtrl datapath_control(const isa::DecodedInstr& d) {
  IdExCtrl c;
  c.reg_write = d.control.reg_write;
  c.mem_read = d.control.mem_read;
  c.mem_write = d.control.mem_write;
  c.mem_to_reg = d.control.mem_read;
  c.mul_en = d.control.mul_en;
  c.use_imm = d.fmt != isa::Format::R;
  c.alu_src = c.use_imm;
  if (c.mem_read) c.wb_sel = WbSel::Mem;
  if (d.control.is_jump) c.wb_sel = WbSel::PcPlus4;

  switch (d.mnemonic) {
    case Mnemonic::Lui: c.alu_op = AluOp::PassB; break;
    case Mnemonic::Auipc: c.use_pc = true; break;
    case Mnemonic::Sub: c.alu_op = AluOp::Sub; break;
    case Mnemonic::Sll:
    case Mnemonic::Slli: c.alu_op = AluOp::Sll; break;
    case Mnemonic::Slt:
    case Mnemonic::Slti: c.alu_op = AluOp::Slt; break;
    case Mnemonic::Sltu:
    case Mnemonic::Sltiu: c.alu_op = AluOp::Sltu; break;
    case Mnemonic::Xor:
    case Mnemonic::Xori: c.alu_op = AluOp::Xor; break;
    case Mnemonic::Srl:
    case Mnemonic::Srli: c.alu_op = AluOp::Srl; break;
    case Mnemonic::Sra:
    case Mnemonic::Srai: c.alu_op = AluOp::Sra; break;
    case Mnemonic::Or:
    case Mnemonic::Ori: c.alu_op = AluOp::Or; break;
    case Mnemonic::And:
    case Mnemonic::Andi: c.alu_op = AluOp::And; break;
    case Mnemonic::Mul: c.mul_op = mul::MulOp::Mul; break;
    case Mnemonic::Mulh: c.mul_op = mul::MulOp::Mulh; break;
    case Mnemonic::Mulhsu: c.mul_op = mul::MulOp::Mulhsu; break;
    case Mnemonic::Mulhu: c.mul_op = mul::MulOp::Mulhu; break;
    default: break;  // Add covers addi, loads, stores, auipc
  }
  return c;
}

// Branches, fences and system instructions carry no datapath work past ID.
bool retires_as_bubble(const isa::DecodedInstr& d) {
  switch (d.mnemonic) {
    case Mnemonic::Fence:
    case Mnemonic::FenceI:
    case Mnemonic::Ecall:
    case Mnemonic::Ebreak:
      return true;
    default:
      return d.control.is_branch;
  }
}

std::uint32_t width_mask(unsigned width) {
  return width >= 4 ? 0xffffffffu : (1u << (8 * width)) - 1u;
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

HaltCause fault_halt(const RetireTag& tag) {
  HaltCause h;
  h.kind = HaltCause::Kind::Error;
  h.pc = tag.pc;
  h.error = tag.fault;
  switch (*tag.fault) {
    case Errc::IllegalInstruction:
      h.message = "illegal instruction " + hex32(tag.instr) + " at pc=" + hex32(tag.pc);
      break;
    case Errc::FetchFromUninitializedMemory:
      h.message = "fetch from uninitialized memory at pc=" + hex32(tag.pc);
      break;
    case Errc::MisalignedAccess:
      h.message = "misaligned access at " + hex32(tag.fault_detail) + " pc=" + hex32(tag.pc);
      break;
    case Errc::MisalignedFetch:
      h.message = "misaligned control-transfer target " + hex32(tag.fault_detail) +
                  " at pc=" + hex32(tag.pc);
      break;
    default:
      h.message = std::string(errc_name(*tag.fault)) + " at pc=" + hex32(tag.pc);
      break;
  }
  return h;
}

}  // namespace

CoreState make_core(const CoreConfig& cfg) {
  CoreState core;
  core.pc_f = cfg.reset_pc;
  core.mul = mul::make_unit(cfg.mul_latency);
  return core;
}

std::uint32_t next_pc(bool reset, std::uint32_t reset_pc, std::uint32_t pc_f, bool branch_taken,
                      std::uint32_t target, bool stall) {
  if (reset) return reset_pc;
  if (branch_taken) return target;
  if (stall) return pc_f;
  return pc_f + 4;
}

std::uint32_t forward_ex(unsigned rs, std::uint32_t rs_val, const ExMemReg& exmem,
                         const MemWbReg& memwb) {
  if (rs == 0) return rs_val;
  if (exmem.valid_mem && exmem.ctrl.reg_write && exmem.rd == rs) return exmem.alu_result;
  if (memwb.valid_wb && memwb.reg_write && memwb.rd == rs) return memwb.wb_data;
  return rs_val;
}

std::uint32_t forward_id(unsigned rs, std::uint32_t regfile_val, const ForwardSource& ex,
                         const ForwardSource& mem, const MemWbReg& wb) {
  if (rs == 0) return 0;
  if (ex.writes && ex.rd == rs) return ex.value;
  if (mem.writes && mem.rd == rs) return mem.value;
  if (wb.valid_wb && wb.reg_write && wb.rd == rs) return wb.wb_data;
  return regfile_val;
}

HazardDecision hazard_detect(const isa::DecodedInstr* id_instr, const IdExReg& idex,
                             const mul::MulUnitState& mul, bool branch_taken) {
  HazardDecision h;
  if (idex.valid_ex && idex.ctrl.mul_en && !mul.out_valid) {
    h.global_stall = true;
    h.stall_pc = true;
    h.stall_ifid = true;
    return h;
  }
  if (id_instr && idex.valid_ex && idex.ctrl.mem_read && idex.ctrl.reg_write && idex.rd != 0) {
    const auto& c = id_instr->control;
    if ((c.uses_rs1 && id_instr->rs1 == idex.rd) || (c.uses_rs2 && id_instr->rs2 == idex.rd)) {
      h.stall_pc = true;
      h.stall_ifid = true;
      h.bubble_idex = true;
      return h;
    }
  }
  h.flush_ifid = branch_taken;
  return h;
}

StoreLanes store_align(unsigned funct3, std::uint32_t addr, std::uint32_t rs2_val) {
  const unsigned lane = addr & 3;
  switch (funct3) {
    case 0:
      return {static_cast<std::uint8_t>(0b0001u << lane), rs2_val << (8 * lane)};
    case 1:
      if (addr & 1) throw Error(Errc::MisalignedAccess, "misaligned sh at " + hex32(addr));
      return {static_cast<std::uint8_t>((addr & 2) ? 0b1100u : 0b0011u), rs2_val << (8 * lane)};
    case 2:
      if (addr & 3) throw Error(Errc::MisalignedAccess, "misaligned sw at " + hex32(addr));
      return {0b1111u, rs2_val};
    default:
      throw Error(Errc::IllegalInstruction, "store funct3 " + std::to_string(funct3));
  }
}

std::uint32_t load_extract(unsigned funct3, std::uint32_t addr, std::uint32_t mem_word) {
  const unsigned shift = 8 * (addr & 3);
  switch (funct3) {
    case 0:
      return static_cast<std::uint32_t>(static_cast<std::int8_t>(mem_word >> shift));
    case 4:
      return (mem_word >> shift) & 0xffu;
    case 1:
    case 5:
      if (addr & 1) throw Error(Errc::MisalignedAccess, "misaligned halfword load at " + hex32(addr));
      if (funct3 == 1) return static_cast<std::uint32_t>(static_cast<std::int16_t>(mem_word >> shift));
      return (mem_word >> shift) & 0xffffu;
    case 2:
      if (addr & 3) throw Error(Errc::MisalignedAccess, "misaligned word load at " + hex32(addr));
      return mem_word;
    default:
      throw Error(Errc::IllegalInstruction, "load funct3 " + std::to_string(funct3));
  }
}

CycleEvents step_cycle(CoreState& core, MemoryImage& mem, const CoreConfig& cfg) {
  CycleEvents ev;
  CycleSignals& sig = ev.signals;
  sig.cycle = core.cycle;
  sig.reset_n = core.reset_n;
  sig.pc_f = core.pc_f;

  if (!core.reset_n) {
    const auto regfile = core.regfile;
    core = make_core(cfg);
    core.regfile = regfile;
    core.cycle = sig.cycle + 1;
    core.pc_f = next_pc(true, cfg.reset_pc, core.pc_f, false, 0, false);
    sig.bus.ic_va = core.pc_f;
    return ev;
  }

  CacheBus& bus = ev.bus;
  const bool global_stall = core.idex.valid_ex && core.idex.ctrl.mul_en && !core.mul.out_valid;

  // ---- WB ------------------------------------------------------------------
  MemWbReg& wb = core.memwb;
  const bool wb_reg_write = wb.valid_wb && wb.reg_write && !wb.wb_done;
  if (wb.tag.live && !wb.wb_done) {
    if (wb.tag.fault) {
      ev.halt = fault_halt(wb.tag);
    } else {
      CommitRecord c;
      c.pc = wb.tag.pc;
      c.instr = wb.tag.instr;
      c.rd = wb.tag.rd;
      c.reg_write = wb.valid_wb && wb.reg_write;
      c.wb_value = c.reg_write ? wb.wb_data : 0;
      c.mem = wb.txn;
      ev.commit = c;
      HaltCause h;
      h.pc = wb.tag.pc;
      if (wb.tag.sys == SysOp::Ecall) {
        h.kind = HaltCause::Kind::Ecall;
        h.code = core.regfile[10];
        ev.halt = h;
      } else if (wb.tag.sys == SysOp::Ebreak) {
        h.kind = HaltCause::Kind::Ebreak;
        ev.halt = h;
      } else if (wb.tohost_value) {
        h.kind = HaltCause::Kind::TohostStore;
        h.code = *wb.tohost_value;
        ev.halt = h;
      }
    }
    if (global_stall) wb.wb_done = true;
  }
  sig.wb_rd = wb.rd;
  sig.wb_reg_write = wb_reg_write;
  sig.wb_data = wb.wb_data;

  // ---- MEM -----------------------------------------------------------------
  ExMemReg& mr = core.exmem;
  std::uint32_t load_val = mr.mem_result;
  std::optional<MemTxn> txn = mr.txn;
  std::optional<std::uint32_t> tohost = mr.tohost_value;
  std::optional<Errc> mem_fault;
  const bool mem_access = mr.valid_mem && (mr.ctrl.mem_read || mr.ctrl.mem_write);
  if (mem_access && !mr.mem_done) {
    const std::uint32_t addr = mr.alu_result;
    const unsigned width = 1u << (mr.funct3 & 3);
    if (addr & (width - 1)) {
      mem_fault = Errc::MisalignedAccess;
    } else if (!core.store_halt) {
      bus.dc_valid = true;
      bus.dc_va = addr;
      if (mr.ctrl.mem_write) {
        const StoreLanes lanes = store_align(mr.funct3, addr, mr.store_data);
        bus.dc_byte_en = lanes.byte_en;
        bus.dc_d_out = lanes.data;
        tohost = mem.write_bytes(addr, lanes.data, lanes.byte_en);
        if (tohost) core.store_halt = true;
        txn = MemTxn{MemTxn::Kind::Store, addr, mr.store_data & width_mask(width),
                     static_cast<std::uint8_t>(width)};
      } else {
        const std::uint32_t word = mem.read_word(addr);
        bus.dc_d_in = word;
        load_val = load_extract(mr.funct3, addr, word);
        txn = MemTxn{MemTxn::Kind::Load, addr, (word >> (8 * (addr & 3))) & width_mask(width),
                     static_cast<std::uint8_t>(width)};
      }
    }
    if (global_stall) {
      mr.mem_done = true;
      mr.mem_result = load_val;
      mr.txn = txn;
      mr.tohost_value = tohost;
    }
  }
  const std::uint32_t mem_fwd_value = mr.ctrl.mem_read ? load_val : mr.alu_result;

  MemWbReg next_wb;
  next_wb.valid_wb = mr.valid_mem && !mem_fault;
  next_wb.rd = mr.rd;
  next_wb.reg_write = next_wb.valid_wb && mr.ctrl.reg_write;
  switch (mr.ctrl.wb_sel) {
    case WbSel::Mem: next_wb.wb_data = load_val; break;
    case WbSel::PcPlus4: next_wb.wb_data = mr.pc_plus4_ex; break;
    case WbSel::Alu: next_wb.wb_data = mr.alu_result; break;
  }
  next_wb.tag = mr.tag;
  if (mem_fault) {
    next_wb.tag.fault = mem_fault;
    next_wb.tag.fault_detail = mr.alu_result;
  }
  if (mr.valid_mem) {
    next_wb.txn = txn;
    next_wb.tohost_value = tohost;
  }

  // ---- EX ------------------------------------------------------------------
  const IdExReg& ex = core.idex;
  const std::uint32_t op_a = forward_ex(ex.rs1, ex.rs1_val, core.exmem, core.memwb);
  const std::uint32_t op_b = forward_ex(ex.rs2, ex.rs2_val, core.exmem, core.memwb);
  std::uint32_t ex_result = alu(ex.ctrl.alu_op, ex.ctrl.use_pc ? ex.pc_ex : op_a,
                                ex.ctrl.use_imm ? ex.imm : op_b);
  if (ex.ctrl.wb_sel == WbSel::PcPlus4) ex_result = ex.pc_plus4_ex;
  if (ex.ctrl.mul_en) ex_result = core.mul.result;

  ForwardSource ex_src;
  ex_src.writes = ex.valid_ex && ex.ctrl.reg_write && !ex.ctrl.mem_read &&
                  (!ex.ctrl.mul_en || core.mul.out_valid);
  ex_src.rd = ex.rd;
  ex_src.value = ex_result;

  ExMemReg next_mem;
  next_mem.alu_result = ex_result;
  next_mem.store_data = cfg.faults.disable_store_data_forwarding ? ex.rs2_val : op_b;
  next_mem.pc_plus4_ex = ex.pc_plus4_ex;
  next_mem.rd = ex.rd;
  next_mem.funct3 = ex.funct3;
  next_mem.ctrl = {ex.ctrl.reg_write, ex.ctrl.mem_read, ex.ctrl.mem_write, ex.ctrl.mem_to_reg,
                   ex.ctrl.wb_sel};
  next_mem.valid_mem = ex.valid_ex;
  next_mem.tag = ex.tag;

  // ---- ID ------------------------------------------------------------------
  const IfIdReg& id = core.ifid;
  std::optional<isa::DecodedInstr> dec;
  std::optional<Errc> id_fault;
  std::uint32_t id_fault_detail = 0;
  if (id.valid_id) {
    if (id.fetch_fault) {
      id_fault = Errc::FetchFromUninitializedMemory;
    } else {
      dec = isa::try_decode(id.instr_id);
      if (!dec) id_fault = Errc::IllegalInstruction;
    }
  }

  auto regfile_read = [&](unsigned r) -> std::uint32_t {
    if (r == 0) return 0;
    if (wb_reg_write && wb.rd == r) return wb.wb_data;  // WB bypass
    return core.regfile[r];
  };
  ForwardSource mem_src;
  mem_src.writes = mr.valid_mem && mr.ctrl.reg_write && !mem_fault;
  mem_src.rd = mr.rd;
  mem_src.value = mem_fwd_value;
  auto id_operand = [&](unsigned r) {
    return forward_id(r, regfile_read(r), ex_src, mem_src, core.memwb);
  };

  const isa::DecodedInstr* dec_ptr = dec ? &*dec : nullptr;
  HazardDecision hz = hazard_detect(dec_ptr, core.idex, core.mul, false);
  bool taken = false;
  std::uint32_t target = 0;
  if (dec && !hz.stall_pc) {
    if (dec->mnemonic == Mnemonic::Jal) {
      taken = true;
      target = id.pc_id + static_cast<std::uint32_t>(dec->imm);
    } else if (dec->mnemonic == Mnemonic::Jalr) {
      taken = true;
      target = (id_operand(dec->rs1) + static_cast<std::uint32_t>(dec->imm)) & ~1u;
    } else if (dec->control.is_branch) {
      taken = branch_condition(dec->funct3, id_operand(dec->rs1), id_operand(dec->rs2));
      target = id.pc_id + static_cast<std::uint32_t>(dec->imm);
    }
    if (taken && (target & 3)) {
      id_fault = Errc::MisalignedFetch;
      id_fault_detail = target;
      taken = false;
    }
    hz = hazard_detect(dec_ptr, core.idex, core.mul, taken);
  }

  IdExReg next_ex;
  std::optional<mul::MulRequest> issue;
  bool id_stops_fetch = false;
  if (id.valid_id && !hz.stall_ifid) {
    RetireTag tag;
    tag.live = true;
    tag.pc = id.pc_id;
    tag.instr = id.instr_id;
    if (id_fault) {
      tag.fault = id_fault;
      tag.fault_detail = id_fault ? id_fault_detail : 0;
      id_stops_fetch = true;
    } else {
      tag.rd = dec->rd;
      if (dec->mnemonic == Mnemonic::Ecall) tag.sys = SysOp::Ecall;
      if (dec->mnemonic == Mnemonic::Ebreak) tag.sys = SysOp::Ebreak;
      id_stops_fetch = tag.sys != SysOp::None;
      if (!retires_as_bubble(*dec)) {
        next_ex.pc_ex = id.pc_id;
        next_ex.pc_plus4_ex = id.pc_plus4_id;
        next_ex.rs1 = dec->rs1;
        next_ex.rs2 = dec->rs2;
        next_ex.rd = dec->rd;
        next_ex.rs1_val = regfile_read(dec->rs1);
        next_ex.rs2_val = regfile_read(dec->rs2);
        next_ex.imm = static_cast<std::uint32_t>(dec->imm);
        next_ex.funct3 = dec->funct3;
        next_ex.funct7 = dec->funct7;
        next_ex.ctrl = datapath_control(*dec);
        next_ex.valid_ex = true;
        if (next_ex.ctrl.mul_en)
          issue = mul::MulRequest{next_ex.ctrl.mul_op, id_operand(dec->rs1), id_operand(dec->rs2)};
      }
    }
    next_ex.tag = tag;
  }

  // ---- IF ------------------------------------------------------------------
  IfIdReg fetched;
  bus.ic_va = core.pc_f;
  bus.ic_valid = !core.fetch_halted;
  if (bus.ic_valid) {
    const auto word = mem.fetch_word(core.pc_f);
    bus.ic_d_in = word.value_or(0);
    fetched = {core.pc_f, word.value_or(0), core.pc_f + 4, true, !word.has_value()};
  }

  // ---- signals -------------------------------------------------------------
  sig.bus = bus;
  sig.branch_taken = taken;
  sig.branch_target = target;
  sig.hazard = hz;
  sig.valid_id = core.ifid.valid_id;
  sig.valid_ex = core.idex.valid_ex;
  sig.valid_mem = core.exmem.valid_mem;
  sig.valid_wb = core.memwb.valid_wb;
  sig.pc_id = core.ifid.pc_id;
  sig.instr_id = core.ifid.instr_id;
  sig.pc_ex = core.idex.pc_ex;
  sig.pc_mem = core.exmem.tag.pc;
  sig.pc_wb = core.memwb.tag.pc;
  sig.mul_busy = core.mul.busy;
  sig.mul_out_valid = core.mul.out_valid;

  // ---- clock edge ----------------------------------------------------------
  if (wb_reg_write) core.regfile[wb.rd] = wb.wb_data;
  if (hz.global_stall) {
    core.mul = mul::tick(core.mul, std::nullopt, false);
  } else {
    const bool consumer_ready = ex.valid_ex && ex.ctrl.mul_en && core.mul.out_valid;
    sig.mul_out_ready = consumer_ready;
    core.mul = mul::tick(core.mul, issue, consumer_ready);
    core.memwb = next_wb;
    core.exmem = next_mem;
    core.idex = next_ex;  // a bubble when bubble_idex
    if (!hz.stall_ifid) {
      const bool flush = hz.flush_ifid && !cfg.faults.disable_ifid_flush;
      core.ifid = (flush || id_stops_fetch || !bus.ic_valid) ? IfIdReg{} : fetched;
    }
    if (id_stops_fetch) core.fetch_halted = true;
    core.pc_f = next_pc(false, cfg.reset_pc, core.pc_f, taken, target,
                        hz.stall_pc || core.fetch_halted);
  }
  ++core.cycle;
  return ev;
}

CoreRunResult run_core(CoreState& core, MemoryImage& mem, const CoreConfig& cfg,
                       std::uint64_t max_cycles, bool record_signals) {
  CoreRunResult r;
  core.reset_n = false;
  core.cycle = 0;
  CycleEvents ev = step_cycle(core, mem, cfg);
  if (record_signals) r.signal_log.push_back(ev.signals);
  core.reset_n = true;

  for (std::uint64_t n = 1; n <= max_cycles; ++n) {
    ev = step_cycle(core, mem, cfg);
    if (record_signals) r.signal_log.push_back(ev.signals);
    if (ev.signals.hazard.bubble_idex) ++r.stats.load_use_stalls;
    if (ev.signals.hazard.global_stall) ++r.stats.global_stall_cycles;
    if (ev.signals.hazard.flush_ifid) ++r.stats.flushes;
    if (ev.commit) {
      r.commits.push_back(*ev.commit);
      r.commit_cycles.push_back(n);
    }
    if (ev.halt) {
      r.halt = *ev.halt;
      r.cycles = n;
      return r;
    }
  }
  r.halt.kind = HaltCause::Kind::MaxCycles;
  r.halt.pc = core.pc_f;
  r.cycles = max_cycles;
  return r;
}

}  // namespace vercore::pipeline
