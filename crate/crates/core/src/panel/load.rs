use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AttributeVector, MarketPanel, PurchaseRecord, PurchaseTable};
use crate::error::{Error, Result};
use crate::io::{column_index, csv_writer, fmt_f64, open, parse_f64};

/// Header names for each purchase field. Defaults are the field names used
/// by [`write_purchases`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub week: String,
    pub product_type: String,
    pub upc: String,
    pub price: String,
    pub servings: String,
    /// One header per attribute, in [`AttributeVector::NAMES`] order.
    pub attributes: Vec<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            week: "week".into(),
            product_type: "type".into(),
            upc: "upc".into(),
            price: "price".into(),
            servings: "servings".into(),
            attributes: AttributeVector::NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(default)]
    pub columns: ColumnMap,
    /// Accepted product-type labels, in panel order.
    pub types: Vec<String>,
}

impl Schema {
    pub fn with_types(types: Vec<String>) -> Self {
        Self {
            columns: ColumnMap::default(),
            types,
        }
    }
}

pub fn load_purchases(path: impl AsRef<Path>, schema: &Schema) -> Result<PurchaseTable> {
    let path = path.as_ref();
    read_purchases(open(path)?, &path.display().to_string(), schema)
}

/// Parses purchase CSV from any reader. `source` names the input in errors;
/// reported rows are 1-based file lines, so the first data row is row 2.
pub fn read_purchases<R: Read>(reader: R, source: &str, schema: &Schema) -> Result<PurchaseTable> {
    let cols = &schema.columns;
    if cols.attributes.len() != AttributeVector::LEN {
        return Err(Error::dims(
            "attribute column map",
            AttributeVector::LEN,
            cols.attributes.len(),
        ));
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx_week = column_index(&headers, &cols.week, source)?;
    let idx_type = column_index(&headers, &cols.product_type, source)?;
    let idx_upc = column_index(&headers, &cols.upc, source)?;
    let idx_price = column_index(&headers, &cols.price, source)?;
    let idx_serv = column_index(&headers, &cols.servings, source)?;
    let idx_attr = cols
        .attributes
        .iter()
        .map(|name| column_index(&headers, name, source))
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let row = row?;
        let line = k + 2;
        let fail = |column: &str, message: String| Error::Load {
            path: source.to_string(),
            row: line,
            column: column.to_string(),
            message,
        };
        let field = |i: usize| row.get(i).unwrap_or("");
        let number = |i: usize, column: &str| {
            parse_f64(field(i)).ok_or_else(|| fail(column, format!("cannot parse `{}` as a number", field(i))))
        };

        let week = field(idx_week)
            .parse::<u32>()
            .map_err(|_| fail(&cols.week, format!("`{}` is not a week index", field(idx_week))))?;
        let product_type = field(idx_type).to_string();
        if !schema.types.contains(&product_type) {
            return Err(fail(
                &cols.product_type,
                format!("unknown product type `{product_type}`"),
            ));
        }
        let price = number(idx_price, &cols.price)?;
        if !(price > 0.0) {
            return Err(fail(&cols.price, format!("price must be positive, got {price}")));
        }
        let servings = number(idx_serv, &cols.servings)?;
        if !(servings > 0.0) {
            return Err(fail(
                &cols.servings,
                format!("servings must be positive, got {servings}"),
            ));
        }
        let mut attrs = [0.0; AttributeVector::LEN];
        for (a, (&i, name)) in attrs.iter_mut().zip(idx_attr.iter().zip(&cols.attributes)) {
            *a = number(i, name)?;
        }
        let attributes = AttributeVector::from_array(attrs);
        if let Err((name, msg)) = attributes.validate() {
            let pos = AttributeVector::NAMES.iter().position(|n| *n == name).unwrap_or(0);
            return Err(fail(&cols.attributes[pos], msg));
        }
        records.push(PurchaseRecord {
            week,
            product_type,
            upc: field(idx_upc).to_string(),
            price_per_serving: price,
            servings,
            attributes,
        });
    }
    Ok(PurchaseTable {
        types: schema.types.clone(),
        records,
    })
}

/// Writes purchases with the default column names.
pub fn write_purchases(path: impl AsRef<Path>, table: &PurchaseTable) -> Result<()> {
    let cols = ColumnMap::default();
    let mut w = csv_writer(path.as_ref())?;
    let mut header = vec![cols.week, cols.product_type, cols.upc, cols.price, cols.servings];
    header.extend(cols.attributes);
    w.write_record(&header)?;
    for r in &table.records {
        let mut row = vec![
            r.week.to_string(),
            r.product_type.clone(),
            r.upc.clone(),
            fmt_f64(r.price_per_serving),
            fmt_f64(r.servings),
        ];
        row.extend(r.attributes.to_array().iter().map(|&v| fmt_f64(v)));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))?;
    Ok(())
}

/// Writes one row per week: `week` then `price_<type>, qty_<type>, share_<type>`
/// for each type in order.
pub fn write_panel(path: impl AsRef<Path>, panel: &MarketPanel) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    let mut header = vec!["week".to_string()];
    for ty in &panel.types {
        header.push(format!("price_{ty}"));
        header.push(format!("qty_{ty}"));
        header.push(format!("share_{ty}"));
    }
    w.write_record(&header)?;
    for t in 0..panel.n_weeks() {
        let mut row = vec![panel.weeks[t].to_string()];
        for i in 0..panel.n_types() {
            row.push(fmt_f64(panel.price[t][i]));
            row.push(fmt_f64(panel.quantity[t][i]));
            row.push(fmt_f64(panel.share[t][i]));
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))?;
    Ok(())
}

pub fn load_panel(path: impl AsRef<Path>) -> Result<MarketPanel> {
    let path = path.as_ref();
    read_panel(open(path)?, &path.display().to_string())
}

/// Reads a panel written by [`write_panel`]. Shares and expenditure are
/// recomputed from prices and quantities; the share columns are optional.
pub fn read_panel<R: Read>(reader: R, source: &str) -> Result<MarketPanel> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let types: Vec<String> = headers
        .iter()
        .filter_map(|h| h.strip_prefix("price_").map(str::to_string))
        .collect();
    if types.is_empty() {
        return Err(Error::MissingColumn {
            path: source.to_string(),
            column: "price_<type>".into(),
        });
    }
    let idx_week = column_index(&headers, "week", source)?;
    let idx_price = types
        .iter()
        .map(|t| column_index(&headers, &format!("price_{t}"), source))
        .collect::<Result<Vec<_>>>()?;
    let idx_qty = types
        .iter()
        .map(|t| column_index(&headers, &format!("qty_{t}"), source))
        .collect::<Result<Vec<_>>>()?;

    let mut weeks = Vec::new();
    let mut price = Vec::new();
    let mut quantity = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let row = row?;
        let line = k + 2;
        let get = |i: usize| -> Result<f64> {
            let raw = row.get(i).unwrap_or("");
            parse_f64(raw).ok_or_else(|| Error::Load {
                path: source.to_string(),
                row: line,
                column: headers.get(i).unwrap_or("").to_string(),
                message: format!("cannot parse `{raw}` as a number"),
            })
        };
        let raw_week = row.get(idx_week).unwrap_or("");
        weeks.push(raw_week.parse::<u32>().map_err(|_| Error::Load {
            path: source.to_string(),
            row: line,
            column: "week".into(),
            message: format!("`{raw_week}` is not a week index"),
        })?);
        price.push(idx_price.iter().map(|&i| get(i)).collect::<Result<Vec<_>>>()?);
        quantity.push(idx_qty.iter().map(|&i| get(i)).collect::<Result<Vec<_>>>()?);
    }
    MarketPanel::from_prices_quantities(types, weeks, price, quantity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::milk_types;

    const GOOD: &str = "\
week,type,upc,price,servings,organic,soy,promotion,lfcf,vitmin_label,protein_g,carb_g,fat_g,cholesterol_dri,sodium_dri,vitmin_dri,servings_per_package
0,2%,u1,17.5,32,0,0,1,0,1,8.5,13,4.8,6.5,5.2,11.9,16
0,skim,u2,17.0,16,0,0,0,0,1,8.8,12.7,0.5,1.7,5.3,12,16
1,2%,u1,18.0,32,0,0,0,0,1,8.5,13,4.8,6.5,5.2,11.9,16
";

    fn schema() -> Schema {
        Schema::with_types(milk_types())
    }

    #[test]
    fn reads_well_formed_rows_in_order() {
        let t = read_purchases(GOOD.as_bytes(), "mem", &schema()).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.records[0].upc, "u1");
        assert_eq!(t.records[1].product_type, "skim");
        assert_eq!(t.records[2].week, 1);
        assert_eq!(t.records[0].attributes.fat_g, 4.8);
    }

    #[test]
    fn bad_number_cites_row_and_column() {
        let bad = GOOD.replacen("17.5", "abc", 1);
        match read_purchases(bad.as_bytes(), "mem", &schema()) {
            Err(Error::Load { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "price");
            }
            other => panic!("expected load error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_type_and_missing_column() {
        let bad = GOOD.replacen("skim", "goat", 1);
        match read_purchases(bad.as_bytes(), "mem", &schema()) {
            Err(Error::Load { row, column, .. }) => {
                assert_eq!((row, column.as_str()), (3, "type"));
            }
            other => panic!("expected load error, got {other:?}"),
        }
        let bad = GOOD.replacen("fat_g", "fat", 1);
        match read_purchases(bad.as_bytes(), "mem", &schema()) {
            Err(Error::MissingColumn { column, .. }) => assert_eq!(column, "fat_g"),
            other => panic!("expected missing column, got {other:?}"),
        }
    }

    #[test]
    fn custom_column_names() {
        let renamed = GOOD.replacen("price", "cents", 1);
        let mut s = schema();
        s.columns.price = "cents".into();
        assert_eq!(read_purchases(renamed.as_bytes(), "mem", &s).unwrap().len(), 3);
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = read_purchases(GOOD.as_bytes(), "mem", &schema()).unwrap();
        let p = dir.path().join("p.csv");
        write_purchases(&p, &t).unwrap();
        assert_eq!(load_purchases(&p, &schema()).unwrap(), t);

        let panel = crate::panel::aggregate_weekly(&crate::panel::milk_sample().unwrap(), Default::default()).unwrap();
        let q = dir.path().join("panel.csv");
        write_panel(&q, &panel).unwrap();
        assert_eq!(load_panel(&q).unwrap(), panel);
    }
}
