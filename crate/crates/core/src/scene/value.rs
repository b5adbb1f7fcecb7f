use alloc::format;
use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SceneError;

/// Smallest accepted extent on any scale axis, in meters.
pub const MIN_EXTENT: f64 = 0.01;

/// A 3-component vector: meters for position and scale, Euler degrees for rotation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vector3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vector3 {
    pub const ZERO: Vector3 = Vector3::new(0.0, 0.0, 0.0);
    pub const ONE: Vector3 = Vector3::new(1.0, 1.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.x * factor, self.y * factor, self.z * factor)
    }

    /// Each component wrapped into `[0, 360)`.
    pub fn normalized_angles(&self) -> Self {
        Self::new(
            normalize_degrees(self.x),
            normalize_degrees(self.y),
            normalize_degrees(self.z),
        )
    }

    /// Parses the `(x, y, z)` text form; whitespace around components is ignored.
    pub fn parse(text: &str) -> Result<Self, SceneError> {
        let [x, y, z] = parse_triple(text)?;
        let v = Self::new(x, y, z);
        if !v.is_finite() {
            return Err(SceneError::InvalidValue(format!(
                "non-finite vector {text:?}"
            )));
        }
        Ok(v)
    }
}

impl fmt::Display for Vector3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {})",
            fixed2(self.x),
            fixed2(self.y),
            fixed2(self.z)
        )
    }
}

impl Serialize for Vector3 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y, self.z].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vector3 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y, z] = <[f64; 3]>::deserialize(d)?;
        Ok(Self::new(x, y, z))
    }
}

/// Formats with exactly two decimals; negative zero prints as `0.00`.
pub fn fixed2(value: f64) -> String {
    let s = format!("{value:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// Wraps an angle into `[0, 360)`. Values that would print as `360.00` snap to 0
/// so the two-decimal text form stays inside the range as well.
pub fn normalize_degrees(deg: f64) -> f64 {
    let mut r = deg % 360.0;
    if r < 0.0 {
        r += 360.0;
    }
    if r >= 359.995 {
        r = 0.0;
    }
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn parse_triple(text: &str) -> Result<[f64; 3], SceneError> {
    let inner = text
        .trim()
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| SceneError::InvalidValue(format!("expected (x, y, z), got {text:?}")))?;
    let mut out = [0.0; 3];
    let mut parts = inner.split(',');
    for slot in out.iter_mut() {
        let part = parts.next().ok_or_else(|| {
            SceneError::InvalidValue(format!("expected 3 components in {text:?}"))
        })?;
        *slot = part
            .trim()
            .parse::<f64>()
            .map_err(|_| SceneError::InvalidValue(format!("bad number {:?}", part.trim())))?;
    }
    if parts.next().is_some() {
        return Err(SceneError::InvalidValue(format!(
            "expected 3 components in {text:?}"
        )));
    }
    Ok(out)
}

/// An 8-bit RGB color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColorRGB {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl ColorRGB {
    pub const WHITE: ColorRGB = ColorRGB::new(255, 255, 255);
    pub const GRAY: ColorRGB = ColorRGB::new(128, 128, 128);

    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    /// `#RRGGBB`, uppercase.
    pub fn to_hex(&self) -> String {
        format!("#{:02X}{:02X}{:02X}", self.r, self.g, self.b)
    }

    pub fn from_hex(text: &str) -> Result<Self, SceneError> {
        let bad = || SceneError::InvalidValue(format!("expected #RRGGBB, got {text:?}"));
        let hex = text.strip_prefix('#').ok_or_else(bad)?;
        if hex.len() != 6 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(bad());
        }
        let channel = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| bad());
        Ok(Self::new(channel(0)?, channel(2)?, channel(4)?))
    }

    /// `(r, g, b)`, the form used in action keys.
    pub fn to_vector_text(&self) -> String {
        format!("({}, {}, {})", self.r, self.g, self.b)
    }

    /// Parses `(r, g, b)`. Components must be integral and within 0..=255;
    /// `255.0` is accepted, `254.5` is not.
    pub fn parse_vector(text: &str) -> Result<Self, SceneError> {
        let [r, g, b] = parse_triple(text)?;
        let channel = |v: f64| {
            if v.is_finite() && (0.0..=255.0).contains(&v) && v == libm::trunc(v) {
                Ok(v as u8)
            } else {
                Err(SceneError::InvalidValue(format!(
                    "color channel {v} outside 0..=255"
                )))
            }
        };
        Ok(Self::new(channel(r)?, channel(g)?, channel(b)?))
    }
}

impl Serialize for ColorRGB {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for ColorRGB {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        ColorRGB::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

macro_rules! materials {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        /// Surface material. The set is closed; `Unset` marks an object that
        /// never had a style applied.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
        pub enum Material {
            #[default]
            Unset,
            $($variant,)+
        }

        impl Material {
            /// Every assignable material, in catalog order.
            pub const ALL: &'static [Material] = &[$(Material::$variant,)+];

            pub fn name(&self) -> &'static str {
                match self {
                    Material::Unset => "Unset",
                    $(Material::$variant => $name,)+
                }
            }

            /// Exact lookup among the assignable materials. `Unset` is not
            /// assignable and is rejected here.
            pub fn from_name(name: &str) -> Option<Material> {
                match name {
                    $($name => Some(Material::$variant),)+
                    _ => None,
                }
            }
        }
    };
}

materials! {
    Basket => "Basket",
    BlackPlastic => "Black_Plastic",
    Brick => "Brick",
    BronzeMetal => "Bronze_Metal",
    CopperMetal => "Copper_metal",
    DarkOak => "Dark_Oak",
    FlowWater => "Flow_Water",
    FlowerPattern => "Flower_Pattern",
    Glass => "Glass",
    GlassDark => "Glass_Dark",
    GoldenMetal => "Golden_metal_material",
    Grass => "Grass",
    LeafPattern => "Leaf_Pattern",
    Leather => "Leather",
    Marble => "Marble",
    RusticWood => "Rustic_Wood",
    ShinyMetal => "Shiny_Metal",
}

impl Material {
    /// Case-insensitive lookup among the assignable materials.
    pub fn from_name_ignore_case(name: &str) -> Option<Material> {
        Self::ALL
            .iter()
            .copied()
            .find(|m| m.name().eq_ignore_ascii_case(name))
    }

    /// Parses a material as stored in scene files, where `Unset` is allowed.
    pub fn from_stored(name: &str) -> Result<Material, SceneError> {
        if name == "Unset" {
            return Ok(Material::Unset);
        }
        Material::from_name(name)
            .ok_or_else(|| SceneError::InvalidValue(format!("unknown material {name:?}")))
    }
}

impl fmt::Display for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Material {
    type Err = SceneError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Material::from_stored(s)
    }
}

impl Serialize for Material {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Material {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Material::from_stored(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_text_form() {
        let v = Vector3::new(-3.8, 1.0, 0.05);
        assert_eq!(v.to_string(), "(-3.80, 1.00, 0.05)");
        assert_eq!(Vector3::parse("( -3.80 ,1.00,  0.05 )").unwrap(), v);
        assert_eq!(
            Vector3::new(-0.001, 0.0, 0.0).to_string(),
            "(0.00, 0.00, 0.00)"
        );
        assert!(Vector3::parse("(1, 2)").is_err());
        assert!(Vector3::parse("(1, 2, 3, 4)").is_err());
        assert!(Vector3::parse("1, 2, 3").is_err());
        assert!(Vector3::parse("(1, inf, 3)").is_err());
    }

    #[test]
    fn angles_wrap_into_range() {
        assert_eq!(normalize_degrees(360.0), 0.0);
        assert_eq!(normalize_degrees(-90.0), 270.0);
        assert_eq!(normalize_degrees(725.0), 5.0);
        assert_eq!(normalize_degrees(359.999), 0.0);
        assert_eq!(normalize_degrees(-0.0).to_bits(), 0.0f64.to_bits());
        assert!(normalize_degrees(-1e-12) < 360.0);
    }

    #[test]
    fn color_forms() {
        let red = ColorRGB::new(255, 0, 0);
        assert_eq!(red.to_hex(), "#FF0000");
        assert_eq!(red.to_vector_text(), "(255, 0, 0)");
        assert_eq!(ColorRGB::from_hex("#ff0000").unwrap(), red);
        assert_eq!(ColorRGB::parse_vector("(255.0, 0, 0)").unwrap(), red);
        assert!(ColorRGB::parse_vector("(256, 0, 0)").is_err());
        assert!(ColorRGB::parse_vector("(1.5, 0, 0)").is_err());
        assert!(ColorRGB::from_hex("FF0000").is_err());
    }

    #[test]
    fn material_set_is_closed() {
        assert_eq!(Material::ALL.len(), 17);
        assert_eq!(
            Material::from_name("Copper_metal"),
            Some(Material::CopperMetal)
        );
        assert_eq!(Material::from_name("Plywood"), None);
        assert_eq!(Material::from_name("Unset"), None);
        assert_eq!(Material::from_stored("Unset").unwrap(), Material::Unset);
        assert_eq!(
            Material::from_name_ignore_case("rustic_wood"),
            Some(Material::RusticWood)
        );
        for m in Material::ALL {
            assert_eq!(Material::from_name(m.name()), Some(*m));
        }
    }
}
