//! CRC-16/MCRF4XX (the MAVLink "X.25" checksum) and CRC_EXTRA seeds.

/// Folds one byte into a running MCRF4XX checksum.
#[inline]
pub fn crc_accumulate(byte: u8, crc: u16) -> u16 {
    let mut tmp = byte ^ (crc & 0xff) as u8;
    tmp ^= tmp << 4;
    (crc >> 8) ^ ((tmp as u16) << 8) ^ ((tmp as u16) << 3) ^ ((tmp as u16) >> 4)
}

pub fn crc_accumulate_slice(bytes: &[u8], mut crc: u16) -> u16 {
    for &b in bytes {
        crc = crc_accumulate(b, crc);
    }
    crc
}

/// CRC-16/MCRF4XX: reflected polynomial 0x1021, init 0xFFFF, no final xor.
pub fn crc16_mcrf4xx(bytes: &[u8]) -> u16 {
    crc_accumulate_slice(bytes, 0xffff)
}

/// Field primitive types of the wire format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldType {
    U8,
    I8,
    U16,
    I16,
    U32,
    I32,
    U64,
    I64,
    F32,
    F64,
}

impl FieldType {
    pub fn size(self) -> usize {
        match self {
            FieldType::U8 | FieldType::I8 => 1,
            FieldType::U16 | FieldType::I16 => 2,
            FieldType::U32 | FieldType::I32 | FieldType::F32 => 4,
            FieldType::U64 | FieldType::I64 | FieldType::F64 => 8,
        }
    }

    pub fn c_name(self) -> &'static str {
        match self {
            FieldType::U8 => "uint8_t",
            FieldType::I8 => "int8_t",
            FieldType::U16 => "uint16_t",
            FieldType::I16 => "int16_t",
            FieldType::U32 => "uint32_t",
            FieldType::I32 => "int32_t",
            FieldType::U64 => "uint64_t",
            FieldType::I64 => "int64_t",
            FieldType::F32 => "float",
            FieldType::F64 => "double",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldDef {
    pub name: &'static str,
    pub ty: FieldType,
    /// 0 for scalars.
    pub array_len: u8,
    pub extension: bool,
}

impl FieldDef {
    pub const fn new(name: &'static str, ty: FieldType) -> Self {
        Self { name, ty, array_len: 0, extension: false }
    }

    pub const fn array(name: &'static str, ty: FieldType, len: u8) -> Self {
        Self { name, ty, array_len: len, extension: false }
    }

    pub const fn ext(name: &'static str, ty: FieldType) -> Self {
        Self { name, ty, array_len: 0, extension: true }
    }

    pub fn wire_size(&self) -> usize {
        self.ty.size() * (self.array_len.max(1) as usize)
    }
}

/// A message definition with fields in XML declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageDef {
    pub name: &'static str,
    pub id: u32,
    pub fields: &'static [FieldDef],
}

impl MessageDef {
    /// Base fields sorted by element size (largest first, stable), then extensions in declaration order.
    pub fn wire_order(&self) -> Vec<FieldDef> {
        let mut base: Vec<FieldDef> = self.fields.iter().copied().filter(|f| !f.extension).collect();
        base.sort_by_key(|f| std::cmp::Reverse(f.ty.size()));
        base.extend(self.fields.iter().copied().filter(|f| f.extension));
        base
    }

    /// Payload length without extension fields.
    pub fn base_len(&self) -> usize {
        self.fields.iter().filter(|f| !f.extension).map(FieldDef::wire_size).sum()
    }

    pub fn max_len(&self) -> usize {
        self.fields.iter().map(FieldDef::wire_size).sum()
    }
}

/// Seed byte mixed into every frame checksum so that both ends must agree on the message layout.
pub fn crc_extra(def: &MessageDef) -> u8 {
    crc_extra_for_fields(def.name, &def.wire_order())
}

/// CRC_EXTRA over an explicit wire-ordered field list.
pub fn crc_extra_for_fields(name: &str, wire_fields: &[FieldDef]) -> u8 {
    let mut crc = crc_accumulate_slice(name.as_bytes(), 0xffff);
    crc = crc_accumulate(b' ', crc);
    for f in wire_fields.iter().filter(|f| !f.extension) {
        crc = crc_accumulate_slice(f.ty.c_name().as_bytes(), crc);
        crc = crc_accumulate(b' ', crc);
        crc = crc_accumulate_slice(f.name.as_bytes(), crc);
        crc = crc_accumulate(b' ', crc);
        if f.array_len > 0 {
            crc = crc_accumulate(f.array_len, crc);
        }
    }
    ((crc & 0xff) ^ (crc >> 8)) as u8
}
