use super::{ClassDef, MacroClass, PropertyConstraint, PropertyKind, Range, Schema};
use crate::quadstore::Datatype;

use MacroClass::*;

const MANY: Option<u32> = None;
const ONE: Option<u32> = Some(1);

fn obj(property: &str, range: &str, min_card: u32, max_card: Option<u32>) -> PropertyConstraint {
    PropertyConstraint {
        property: property.into(),
        kind: PropertyKind::Object,
        range: if range == "*" {
            Range::Resource
        } else {
            Range::Class(range.into())
        },
        min_card,
        max_card,
        allowed_values: None,
    }
}

fn data(property: &str, dt: Datatype, min_card: u32, max_card: Option<u32>) -> PropertyConstraint {
    PropertyConstraint {
        property: property.into(),
        kind: PropertyKind::Data,
        range: Range::Scalar(dt),
        min_card,
        max_card,
        allowed_values: None,
    }
}

fn one_of(mut c: PropertyConstraint, values: &[&str]) -> PropertyConstraint {
    c.allowed_values = Some(values.iter().map(|v| v.to_string()).collect());
    c
}

fn class(
    name: &str,
    macroclass: MacroClass,
    parent: Option<&str>,
    constraints: Vec<PropertyConstraint>,
) -> ClassDef {
    ClassDef {
        name: name.into(),
        macroclass,
        parent: parent.map(Into::into),
        constraints,
    }
}

fn coords(min_card: u32) -> Vec<PropertyConstraint> {
    vec![
        data("lat", Datatype::Decimal, min_card, ONE),
        data("long", Datatype::Decimal, min_card, ONE),
    ]
}

fn with(mut base: Vec<PropertyConstraint>, more: Vec<PropertyConstraint>) -> Vec<PropertyConstraint> {
    base.extend(more);
    base
}

/// Regional categories that classify a Service as Accommodation.
pub const ACCOMMODATION_CATEGORIES: [&str; 14] = [
    "tourist_resort",
    "hotel",
    "tourist_home",
    "rest_home",
    "religiuos_guest_house",
    "bed_and_breakfast",
    "hostel",
    "summer_residence",
    "vacation_resort",
    "farmhouse",
    "day_care_center",
    "camping",
    "historic_residence",
    "mountain_dew",
];

pub const SERVICE_SUBCLASSES: [&str; 12] = [
    "Accommodation",
    "GovernmentOffice",
    "TourismService",
    "TransferService",
    "CulturalActivity",
    "FinancialService",
    "Shopping",
    "Healthcare",
    "Education",
    "Entertainment",
    "Emergency",
    "WineAndFood",
];

pub const DATASET_STATUSES: [&str; 6] = ["registered", "ingested", "improved", "mapped", "indexed", "failed"];

/// Builds the km4City schema. Deterministic.
pub fn load_schema() -> Schema {
    use Datatype::*;
    let mut classes = vec![
        // Administration
        class("PA", Administration, None, vec![
            data("name", String, 0, ONE),
            obj("hasResolution", "Resolution", 0, MANY),
            obj("hasStatistic", "StatisticalData", 0, MANY),
        ]),
        class("Region", Administration, Some("PA"), vec![obj("hasProvince", "Province", 1, MANY)]),
        class("Province", Administration, Some("PA"), vec![obj("hasMunicipality", "Municipality", 1, MANY)]),
        class("Municipality", Administration, Some("PA"), vec![
            data("istatCode", String, 0, ONE),
            obj("hasWeatherReport", "WeatherReport", 0, MANY),
        ]),
        class("Resolution", Administration, None, vec![obj("hasApprovedPA", "PA", 0, ONE)]),
        class("StatisticalData", Administration, None, vec![
            one_of(data("aggregatePeriod", String, 0, ONE), &["day", "week", "month"]),
            data("periodKey", String, 0, ONE),
            obj("aggregatedClass", "*", 0, ONE),
            obj("aggregatedProperty", "*", 0, ONE),
            data("sampleCount", Integer, 0, ONE),
            data("sum", Decimal, 0, ONE),
            data("mean", Decimal, 0, ONE),
            data("min", Decimal, 0, ONE),
            data("max", Decimal, 0, ONE),
        ]),
        // Street guide
        class("RoadElement", StreetGuide, None, vec![
            obj("startsAtNode", "Node", 1, ONE),
            obj("endsAtNode", "Node", 1, ONE),
            obj("formAdminRoad", "AdministrativeRoad", 0, MANY),
            obj("hasRule", "EntryRule", 0, MANY),
            obj("managingAuthority", "PA", 0, ONE),
        ]),
        class("Node", StreetGuide, None, coords(1)),
        class("Road", StreetGuide, None, vec![
            obj("containsElement", "RoadElement", 1, MANY),
            data("roadName", String, 0, ONE),
            data("alternativeName", String, 0, MANY),
            obj("inMunicipalityOf", "Municipality", 0, ONE),
            obj("hasStreetNumber", "StreetNumber", 0, MANY),
            obj("hasStatistic", "StatisticalData", 0, MANY),
        ]),
        // N:M with Road through coincideWith.
        class("AdministrativeRoad", StreetGuide, None, vec![
            obj("hasRoadElement", "RoadElement", 0, MANY),
            obj("coincideWith", "Road", 0, MANY),
            obj("ownerAuthority", "PA", 0, ONE),
        ]),
        class("Milestone", StreetGuide, None, with(
            vec![obj("isInElement", "AdministrativeRoad", 1, ONE)],
            coords(0),
        )),
        class("StreetNumber", StreetGuide, None, vec![
            obj("belongToRoad", "Road", 1, ONE),
            data("number", String, 1, ONE),
            one_of(data("classCode", String, 0, ONE), &["Black", "Red"]),
            obj("hasExternalAccess", "Entry", 1, MANY),
            obj("hasInternalAccess", "Entry", 0, MANY),
        ]),
        class("Entry", StreetGuide, None, coords(0)),
        class("EntryRule", StreetGuide, None, vec![
            obj("accessToElement", "RoadElement", 1, ONE),
            obj("hasManeuver", "Maneuver", 0, MANY),
        ]),
        class("Maneuver", StreetGuide, None, vec![
            obj("hasFirstElem", "RoadElement", 1, ONE),
            obj("hasSecondElem", "RoadElement", 1, ONE),
            obj("hasThirdElem", "RoadElement", 0, ONE),
            obj("concerningNode", "Node", 1, ONE),
        ]),
        class("Junction", StreetGuide, None, coords(1)),
        class("RoadLink", StreetGuide, None, vec![
            obj("starting", "Junction", 1, ONE),
            obj("ending", "Junction", 1, ONE),
        ]),
        // Points of interest
        class("Service", PointOfInterest, None, with(coords(0), vec![
            data("name", String, 0, ONE),
            data("serviceCategory", String, 0, ONE),
            data("streetAddress", String, 0, ONE),
            data("civicNumber", String, 0, ONE),
            data("locality", String, 0, ONE),
            data("ATECOcode", String, 0, ONE),
            obj("hasAccess", "Entry", 0, ONE),
            obj("isInRoad", "Road", 0, MANY),
            obj("hasGRLocation", "*", 0, ONE),
        ])),
        class("TransferService", PointOfInterest, Some("Service"), vec![
            obj("hasCarParkSensor", "CarParkSensor", 0, MANY),
        ]),
        // Local public transport
        class("Lot", LocalPublicTransport, None, vec![data("lotName", String, 0, ONE)]),
        class("PublicTransportLine", LocalPublicTransport, None, vec![
            obj("isPartOfLot", "Lot", 0, ONE),
            data("lineNumber", String, 0, ONE),
        ]),
        class("Ride", LocalPublicTransport, None, vec![
            obj("scheduledOnLine", "PublicTransportLine", 1, ONE),
            obj("onRoute", "Route", 0, ONE),
        ]),
        class("Route", LocalPublicTransport, None, vec![
            obj("hasFirstSection", "RouteSection", 0, ONE),
            obj("hasSection", "RouteSection", 0, MANY),
            obj("hasFirstStop", "BusStop", 0, ONE),
            obj("hasRouteLink", "RouteLink", 0, MANY),
        ]),
        class("RouteSection", LocalPublicTransport, None, vec![
            obj("startsAtStop", "BusStop", 0, ONE),
            obj("endsAtStop", "BusStop", 0, ONE),
        ]),
        class("RouteLink", LocalPublicTransport, None, vec![
            obj("beginsAtJunction", "RouteJunction", 1, ONE),
            obj("finishesAtJunction", "RouteJunction", 1, ONE),
        ]),
        class("RouteJunction", LocalPublicTransport, None, coords(0)),
        class("BusStop", LocalPublicTransport, None, with(coords(1), vec![
            data("name", String, 0, ONE),
            obj("isPartOfLot", "Lot", 0, MANY),
        ])),
        class("RailwayLine", LocalPublicTransport, None, vec![obj("hasElement", "RailwayElement", 0, MANY)]),
        class("RailwayElement", LocalPublicTransport, None, vec![
            obj("isPartOfLine", "RailwayLine", 0, ONE),
            obj("composeSection", "RailwaySection", 0, ONE),
            obj("startAtJunction", "RailwayJunction", 1, ONE),
            obj("endAtJunction", "RailwayJunction", 1, ONE),
        ]),
        class("RailwayDirection", LocalPublicTransport, None, vec![obj("isComposedBy", "RailwayElement", 0, MANY)]),
        class("RailwaySection", LocalPublicTransport, None, vec![obj("isComposedBy", "RailwayElement", 0, MANY)]),
        class("RailwayJunction", LocalPublicTransport, None, coords(0)),
        class("TrainStation", LocalPublicTransport, None, vec![obj("correspondToJunction", "RailwayJunction", 1, ONE)]),
        class("GoodsYard", LocalPublicTransport, None, vec![obj("correspondToJunction", "RailwayJunction", 1, ONE)]),
        // Sensors
        class("CarParkSensor", Sensors, None, vec![
            obj("observeCarPark", "TransferService", 0, ONE),
            obj("hasRecord", "SituationRecord", 0, MANY),
        ]),
        class("SituationRecord", Sensors, None, vec![
            obj("relatedToSensor", "CarParkSensor", 1, ONE),
            obj("observationTime", "Instant", 1, ONE),
            data("freeParkingLots", Integer, 0, ONE),
            data("occupiedParkingLots", Integer, 0, ONE),
        ]),
        class("WeatherReport", Sensors, None, vec![
            obj("updateTime", "Instant", 1, ONE),
            obj("hasPrediction", "WeatherPrediction", 0, MANY),
            obj("refersToMunicipality", "Municipality", 0, ONE),
        ]),
        class("WeatherPrediction", Sensors, None, vec![
            data("day", String, 0, ONE),
            data("description", String, 0, ONE),
            data("minTemp", Decimal, 0, ONE),
            data("maxTemp", Decimal, 0, ONE),
        ]),
        class("SensorSiteTable", Sensors, None, vec![data("tableName", String, 0, ONE)]),
        class("SensorSite", Sensors, None, vec![
            obj("formsTable", "SensorSiteTable", 0, ONE),
            obj("placeOnRoad", "Road", 0, ONE),
        ]),
        class("Observation", Sensors, None, vec![
            obj("measuredBySensor", "SensorSite", 1, ONE),
            obj("measuredTime", "Instant", 1, ONE),
            data("value", Decimal, 1, ONE),
        ]),
        class("TrafficConcentration", Sensors, Some("Observation"), vec![]),
        class("TrafficHeadway", Sensors, Some("Observation"), vec![]),
        class("TrafficSpeed", Sensors, Some("Observation"), vec![]),
        class("TrafficFlow", Sensors, Some("Observation"), vec![]),
        class("AVMRecord", Sensors, None, with(coords(0), vec![
            obj("hasLastStopTime", "Instant", 1, ONE),
            obj("lastStop", "BusStop", 0, ONE),
            obj("concernLine", "PublicTransportLine", 0, ONE),
            obj("includeForecast", "BusStopForecast", 0, MANY),
            data("vehicle", String, 0, ONE),
            data("delay", Decimal, 0, ONE),
        ])),
        class("BusStopForecast", Sensors, None, vec![
            obj("atBusStop", "BusStop", 1, ONE),
            obj("hasExpectedTime", "Instant", 1, ONE),
        ]),
        // Temporal
        class("Instant", Temporal, None, vec![
            data("inXSDDateTime", DateTime, 1, ONE),
            obj("instantParking", "SituationRecord", 0, ONE),
            obj("instantWReport", "WeatherReport", 0, ONE),
            obj("instantObserv", "Observation", 0, ONE),
            obj("instantForecast", "BusStopForecast", 0, ONE),
            obj("instantAVM", "AVMRecord", 0, ONE),
        ]),
        // Metadata
        class("Dataset", Metadata, None, vec![
            data("datasetId", String, 1, ONE),
            data("creationDate", DateTime, 1, ONE),
            data("source", String, 1, ONE),
            one_of(data("originalFormat", String, 1, ONE), &["CSV", "XML", "KMZ", "FEED"]),
            data("description", String, 0, ONE),
            data("license", String, 1, ONE),
            one_of(data("processType", String, 1, ONE), &["static", "semi-static", "realtime"]),
            one_of(data("automationLevel", String, 1, ONE), &["automatic", "semi-automatic", "manual"]),
            data("accessType", String, 0, ONE),
            data("updatePeriod", Integer, 1, ONE),
            data("lastUpdate", DateTime, 0, ONE),
            data("tripleCreationDate", DateTime, 0, ONE),
            one_of(data("status", String, 1, ONE), &DATASET_STATUSES),
            one_of(
                data("macroclass", String, 1, ONE),
                &MacroClass::ALL.map(MacroClass::as_str),
            ),
            data("mappingSpec", String, 0, ONE),
        ]),
    ];
    classes.push(class("Accommodation", PointOfInterest, Some("Service"), vec![one_of(
        data("serviceCategory", String, 1, ONE),
        &ACCOMMODATION_CATEGORIES,
    )]));
    for name in SERVICE_SUBCLASSES {
        if !matches!(name, "Accommodation" | "TransferService") {
            classes.push(class(name, PointOfInterest, Some("Service"), vec![]));
        }
    }
    Schema::from_classes(classes)
}
